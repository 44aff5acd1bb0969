"""Upper/lower expectations, capacities and Choquet integrals over a finite
ambiguity set of one-step laws."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .distributions import (Distribution, NonIntegrableError, TestFunction,
                            integrate_tail, from_config)


@dataclass(frozen=True)
class AmbiguitySet:
    """Ordered, nonempty tuple of member laws; indices are strategy outputs."""

    members: tuple[Distribution, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValueError("an ambiguity set needs at least one member")
        if not all(isinstance(m, Distribution) for m in members):
            raise TypeError("members must be Distribution instances")
        object.__setattr__(self, "members", members)

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, k):
        return self.members[k]

    @property
    def is_discrete(self) -> bool:
        return all(m.is_discrete for m in self.members)

    @property
    def tail_index(self) -> float:
        return min(m.tail_index for m in self.members)

    def support(self) -> np.ndarray:
        """Union of member atoms (discrete sets only)."""
        if not self.is_discrete:
            raise ValueError("support is only defined for all-discrete sets")
        return np.unique(np.concatenate([m.atoms()[0] for m in self.members]))

    def mean_upper(self) -> float:
        return max(m.mean() for m in self.members)

    def mean_lower(self) -> float:
        return min(m.mean() for m in self.members)

    @classmethod
    def from_config(cls, items) -> "AmbiguitySet":
        if not isinstance(items, list) or not items:
            raise ValueError("'theta' must be a nonempty list of distributions")
        return cls(tuple(from_config(d) for d in items))


@dataclass(frozen=True)
class CapacityPair:
    upper: float
    lower: float


@dataclass(frozen=True)
class Transform:
    """``identity`` or ``abs_power`` (``|x|**r``) applied before integrating."""

    kind: str = "identity"
    r: float = 1.0

    def __post_init__(self):
        if self.kind not in ("identity", "abs_power"):
            raise ValueError(f"unknown transform {self.kind!r}")
        if self.kind == "abs_power" and not self.r > 0:
            raise ValueError("abs_power needs r > 0")


IDENTITY = Transform()


def abs_power(r: float) -> Transform:
    return Transform("abs_power", float(r))


def upper_expectation(theta: AmbiguitySet, f: TestFunction) -> float:
    return max(m.expect(f) for m in theta)


def lower_expectation(theta: AmbiguitySet, f: TestFunction) -> float:
    return min(m.expect(f) for m in theta)


def marginal_capacity(theta: AmbiguitySet, t: float, absolute: bool = False,
                      complement: bool = False) -> CapacityPair:
    """Upper/lower probability of ``{X >= t}`` (or ``{|X| >= t}``).

    With ``complement=True`` the event is ``{X < t}`` (``{|X| < t}``), each
    member probability computed directly so conjugacy is a genuine check.
    """
    probs = []
    for m in theta:
        if absolute:
            if complement:
                p = 0.0 if t <= 0 else m.prob_lt(t) - m.cdf(-t)
            else:
                p = m.abs_tail_prob(t)
        else:
            p = m.prob_lt(t) if complement else m.tail_prob(t)
        probs.append(p)
    return CapacityPair(max(probs), min(probs))


def upper_tail(theta: AmbiguitySet, t: float, transform: Transform = IDENTITY) -> float:
    """V(g(X) >= t) = max over members."""
    if transform.kind == "identity":
        return max(m.tail_prob(t) for m in theta)
    if t <= 0:
        return 1.0
    return max(m.abs_tail_prob(t ** (1.0 / transform.r)) for m in theta)


def _transformed_points(theta: AmbiguitySet, transform: Transform) -> list[float]:
    pts = set()
    for m in theta:
        for p in m.jump_points():
            pts.add(p if transform.kind == "identity" else abs(p) ** transform.r)
    return sorted(pts)


def choquet_upper(theta: AmbiguitySet, transform: Transform = IDENTITY) -> float:
    """Choquet integral of g(X) with respect to the upper probability.

    int_0^inf V(g >= t) dt + int_{-inf}^0 [V(g >= t) - 1] dt.
    """
    alpha = theta.tail_index
    need = 1.0 if transform.kind == "identity" else transform.r
    if alpha <= need:
        raise NonIntegrableError(
            f"tail index {alpha} does not exceed {need}: Choquet integral diverges")
    if theta.is_discrete:
        return _choquet_discrete(theta, transform)
    decay = alpha / need
    pts = _transformed_points(theta, transform)
    pos = integrate_tail(lambda t: upper_tail(theta, t, transform),
                         [p for p in pts if p > 0], decay, epsabs=1e-11)
    if transform.kind == "abs_power":
        return pos
    # 1 - V(X >= -t) = min_theta P(X < -t)
    neg = integrate_tail(lambda t: min(m.prob_lt(-t) for m in theta),
                         [-p for p in pts if p < 0], decay, epsabs=1e-11)
    return pos - neg


def _choquet_discrete(theta: AmbiguitySet, transform: Transform) -> float:
    laws = []
    for m in theta:
        v, p = m.atoms()
        if transform.kind == "abs_power":
            v = np.abs(v) ** transform.r
        laws.append((v, p))
    grid = sorted({float(x) for v, _ in laws for x in v} | {0.0})
    total = 0.0
    for lo, hi in zip(grid, grid[1:]):
        # V(g >= t) is constant on (lo, hi] and equals its value at hi
        u = max(float(np.sum(p[v >= hi])) for v, p in laws)
        total += (hi - lo) * (u if lo >= 0 else u - 1.0)
    return total


def choquet_lower(theta: AmbiguitySet, transform: Transform = IDENTITY) -> float:
    """Choquet integral with respect to the lower probability.

    Uses C_v(X) = -C_V(-X) for the identity transform.
    """
    if transform.kind == "identity":
        from .distributions import Scaled
        return -choquet_upper(AmbiguitySet(tuple(Scaled(m, -1.0) for m in theta)))
    raise NotImplementedError("lower Choquet integral only for the identity transform")


@dataclass
class AgreementReport:
    grid: list[float]
    upper_x: list[float]
    upper_y: list[float]
    equal: list[bool]
    jump_points: list[float]
    unexplained: list[float] = field(default_factory=list)
    choquet_x: float = math.nan
    choquet_y: float = math.nan

    @property
    def passed(self) -> bool:
        return not self.unexplained and abs(self.choquet_x - self.choquet_y) <= 1e-9


def capacity_agreement(theta_x: AmbiguitySet, theta_y: AmbiguitySet,
                       grid: Sequence[float], tol: float = 1e-12) -> AgreementReport:
    """Compare the upper tails of two identically distributed families.

    Disagreements are tolerated only at jump points of either tail; the
    Choquet integrals (identity transform) must agree.
    """
    jumps = sorted({p for th in (theta_x, theta_y) for m in th for p in m.jump_points()
                    if m.atoms() is not None})
    jump_set = set(jumps)
    ux, uy, eq, bad = [], [], [], []
    for x in grid:
        a = upper_tail(theta_x, x)
        b = upper_tail(theta_y, x)
        same = abs(a - b) <= tol
        ux.append(a)
        uy.append(b)
        eq.append(same)
        if not same and x not in jump_set:
            bad.append(x)
    rep = AgreementReport(list(grid), ux, uy, eq, jumps, bad)
    rep.choquet_x = choquet_upper(theta_x)
    rep.choquet_y = choquet_upper(theta_y)
    return rep


@dataclass(frozen=True)
class DominationCondition:
    """V(|X_n| >= t) <= C * P(|X| >= t) with C_V(|X|^r) finite."""

    constant_C: float
    dominating: Distribution
    order_r: float

    def __post_init__(self):
        if not self.constant_C >= 1:
            raise ValueError("domination constant C must be >= 1")
        if not 1.0 <= self.order_r < 2.0:
            raise ValueError("r must lie in [1, 2)")

    @property
    def moment_finite(self) -> bool:
        return self.dominating.tail_index > self.order_r

    def choquet_moment(self) -> float:
        """C_V(|X|^r) for the dominating law."""
        return choquet_upper(AmbiguitySet((self.dominating,)), abs_power(self.order_r))

    def dominating_tail(self, t: float) -> float:
        return self.dominating.abs_tail_prob(t)

    @classmethod
    def from_config(cls, cfg: dict) -> "DominationCondition":
        return cls(float(cfg.get("C", 1.0)), from_config(cfg["dominating"]), float(cfg["r"]))


def verify_domination(cond: DominationCondition, theta: AmbiguitySet,
                      grid_size: int = 400) -> float:
    """Largest ``max_theta P(|X_1| >= t) - C P(|X| >= t)`` over a log grid.

    The grid also contains every jump point of either side; a result <= 0
    means the domination hypothesis holds on the grid.
    """
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    jumps = {abs(p) for m in list(theta) + [cond.dominating] for p in m.jump_points()}
    ref = max([1.0] + [p for p in jumps if math.isfinite(p)])
    grid = np.concatenate([[0.0], np.logspace(math.log10(ref) - 3, math.log10(ref) + 6, grid_size),
                           sorted(jumps)])
    worst = -math.inf
    for t in grid:
        lhs = max(m.abs_tail_prob(t) for m in theta)
        worst = max(worst, lhs - cond.constant_C * cond.dominating_tail(t))
    return float(worst)
