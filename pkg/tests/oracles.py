"""Independent reference computations shared by the unit and acceptance tests."""

import itertools
from fractions import Fraction

import numpy as np

from sublln.ambiguity import AmbiguitySet
from sublln.capacity import PathEvent
from sublln.distributions import Discrete
from sublln.sequences import histories


def enumerate_strategies(theta: AmbiguitySet, n: int):
    """Every deterministic adaptive rule as a dict history -> member index."""
    keys = list(histories([float(v) for v in theta.support()], n))
    for choice in itertools.product(range(len(theta)), repeat=len(keys)):
        yield dict(zip(keys, choice))


def path_probability(theta: AmbiguitySet, rule: dict, event: PathEvent, n: int) -> Fraction:
    """P(event) under ``rule``, summed exactly over all value paths."""
    laws = [dict(zip(*(a.tolist() for a in m.atoms()))) for m in theta]
    support = [float(v) for v in theta.support()]
    total = Fraction(0)
    for path in itertools.product(support, repeat=n):
        p = Fraction(1)
        for j in range(n):
            q = laws[rule[path[:j]]].get(path[j], 0.0)
            if q == 0:
                p = Fraction(0)
                break
            p *= Fraction(q)
        if p and bool(event.occurs(sum(path), n)):
            total += p
    return total


def brute_force_extremes(theta: AmbiguitySet, event: PathEvent, n: int):
    """(max, min) of P(event) over all deterministic adaptive rules."""
    vals = [path_probability(theta, rule, event, n) for rule in enumerate_strategies(theta, n)]
    return float(max(vals)), float(min(vals))


def random_binary_instance(rng: np.random.Generator):
    """K = 2 members on a common two-point support, n <= 3, random event."""
    lo, hi = sorted(rng.choice([-2.0, -1.0, 0.0, 1.0, 2.0, 3.0], 2, replace=False))
    members = []
    for _ in range(2):
        p = float(rng.integers(1, 20)) / 20
        members.append(Discrete(((lo, 1.0 - p), (hi, p))))
    theta = AmbiguitySet(tuple(members))
    n = int(rng.integers(1, 4))
    kind = rng.choice(["lower_dev", "upper_dev", "union_dev", "band", "custom_threshold"])
    if kind == "custom_threshold":
        event = PathEvent("custom_threshold", threshold=float(rng.integers(-6, 10)) / 2)
    else:
        event = PathEvent.for_theta(str(kind), theta, float(rng.uniform(0.01, 0.8)))
    if rng.random() < 0.3:
        event = event.complement()
    return theta, n, event


def random_discrete_instance(rng: np.random.Generator):
    """Up to 3 members on up to 3 support points, n <= 6."""
    k = int(rng.integers(1, 4))
    pts = sorted(rng.choice([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0], int(rng.integers(1, 4)), replace=False))
    members = []
    for _ in range(k):
        w = rng.integers(1, 10, len(pts)).astype(float)
        p = w / w.sum()
        p[-1] = 1.0 - p[:-1].sum()
        members.append(Discrete(tuple(zip(pts, p.tolist()))))
    theta = AmbiguitySet(tuple(members))
    n = int(rng.integers(1, 7))
    kind = str(rng.choice(["lower_dev", "upper_dev", "union_dev", "band", "custom_threshold"]))
    if kind == "custom_threshold":
        event = PathEvent("custom_threshold", threshold=float(rng.uniform(-2 * n, 2 * n)))
    else:
        event = PathEvent.for_theta(kind, theta, float(rng.uniform(0.01, 1.0)), float(rng.choice([1.0, 1.5])))
    return theta, n, event
