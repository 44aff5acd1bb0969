"""Pseudo-independent sequences built from adaptive strategies over an
ambiguity set, plus the exact audit of the conditional-expectation interval."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .ambiguity import AmbiguitySet, lower_expectation, upper_expectation
from .distributions import Distribution, TestFunction


class UnsupportedAuditError(ValueError):
    """Exact audit requested for a set with continuous members."""


# ---------------------------------------------------------------------------
# strategies


@dataclass(frozen=True)
class Strategy:
    """Rule mapping the observed history to a member index.

    ``choose`` receives the tuple of past values (X_1, ..., X_{j-1}) and the
    number of members K.
    """

    reads_history = True

    def choose(self, history: Sequence[float], n_members: int) -> int:
        raise NotImplementedError

    def validate(self, n_members: int) -> None:
        pass

    def _kernel_spec(self):
        return None

    @property
    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Constant(Strategy):
    index: int = 0
    reads_history = False

    def choose(self, history, n_members):
        return self.index

    def validate(self, n_members):
        if not 0 <= self.index < n_members:
            raise ValueError(f"constant index {self.index} outside [0, {n_members})")

    def _kernel_spec(self):
        return _kernels.STRAT_CONSTANT, (self.index, 0), 0.0, None

    @property
    def label(self):
        return f"constant({self.index})"


@dataclass(frozen=True)
class RoundRobin(Strategy):
    reads_history = False

    def choose(self, history, n_members):
        return len(history) % n_members

    def _kernel_spec(self):
        return _kernels.STRAT_ROUND_ROBIN, (0, 0), 0.0, None

    @property
    def label(self):
        return "round_robin"


@dataclass(frozen=True)
class Threshold(Strategy):
    """``hi`` if S_{j-1} < level * (j - 1), else ``lo`` (S_0 = 0)."""

    lo: int = 0
    hi: int = 1
    level: float = 0.0

    def choose(self, history, n_members):
        s = math.fsum(history)
        return self.hi if s < self.level * len(history) else self.lo

    def validate(self, n_members):
        for k in (self.lo, self.hi):
            if not 0 <= k < n_members:
                raise ValueError(f"threshold index {k} outside [0, {n_members})")

    def _kernel_spec(self):
        return _kernels.STRAT_THRESHOLD, (self.lo, self.hi), float(self.level), None

    @property
    def label(self):
        return f"threshold({self.lo},{self.hi},{self.level:g})"


@dataclass(frozen=True)
class LastSign(Strategy):
    """``neg`` if X_{j-1} < 0, else ``pos`` (X_0 taken as 0)."""

    neg: int = 0
    pos: int = 1

    def choose(self, history, n_members):
        return self.neg if history and history[-1] < 0 else self.pos

    def validate(self, n_members):
        for k in (self.neg, self.pos):
            if not 0 <= k < n_members:
                raise ValueError(f"last_sign index {k} outside [0, {n_members})")

    def _kernel_spec(self):
        return _kernels.STRAT_LAST_SIGN, (self.neg, self.pos), 0.0, None

    @property
    def label(self):
        return f"last_sign({self.neg},{self.pos})"


@dataclass(frozen=True)
class Randomized(Strategy):
    """History-free schedule: step j uses ``genome[(j - 1) % len(genome)]``.

    Genomes are drawn at random by the strategy search, hence the name.
    """

    genome: tuple[int, ...] = (0,)
    reads_history = False

    def __post_init__(self):
        if not self.genome:
            raise ValueError("genome must be nonempty")
        object.__setattr__(self, "genome", tuple(int(g) for g in self.genome))

    def choose(self, history, n_members):
        return self.genome[len(history) % len(self.genome)]

    def validate(self, n_members):
        if not all(0 <= g < n_members for g in self.genome):
            raise ValueError("genome entries must be member indices")

    def _kernel_spec(self):
        return _kernels.STRAT_GENOME, (0, 0), 0.0, np.array(self.genome, dtype=np.int64)

    @property
    def label(self):
        return "genome(" + "".join(str(g) for g in self.genome) + ")"


@dataclass(frozen=True)
class Table(Strategy):
    """Explicit map from the last ``depth`` values to an index.

    Histories shorter than ``depth`` are looked up whole.  Missing keys fall
    back to ``default``; with ``default=None`` the table must be total.
    """

    depth: int
    entries: dict = field(hash=False, compare=False)
    default: int | None = None

    def choose(self, history, n_members):
        key = tuple(float(v) for v in history[-self.depth:]) if self.depth else ()
        if key in self.entries:
            return self.entries[key]
        if self.default is None:
            raise KeyError(f"table strategy has no entry for history {key}")
        return self.default

    def validate(self, n_members):
        for k in list(self.entries.values()) + ([self.default] if self.default is not None else []):
            if not 0 <= k < n_members:
                raise ValueError(f"table index {k} outside [0, {n_members})")

    def is_total(self, support: Sequence[float], horizon: int | None = None) -> bool:
        """Whether every history over ``support`` up to the depth is covered."""
        if self.default is not None:
            return True
        longest = self.depth if horizon is None else min(self.depth, horizon - 1)
        for length in range(longest + 1):
            for h in itertools.product([float(v) for v in support], repeat=length):
                if h not in self.entries:
                    return False
        return True

    @property
    def label(self):
        return f"table(depth={self.depth},{len(self.entries)} entries)"


def strategy_from_config(cfg: dict) -> Strategy:
    kind = cfg.get("kind")
    if kind == "constant":
        return Constant(int(cfg.get("index", 0)))
    if kind == "round_robin":
        return RoundRobin()
    if kind == "threshold":
        return Threshold(int(cfg.get("lo", 0)), int(cfg.get("hi", 1)), float(cfg.get("level", 0.0)))
    if kind == "last_sign":
        return LastSign(int(cfg.get("neg", 0)), int(cfg.get("pos", 1)))
    if kind in ("randomized", "genome"):
        return Randomized(tuple(cfg["genome"]))
    if kind == "table":
        entries = {tuple(float(v) for v in h): int(k) for h, k in cfg["entries"]}
        return Table(int(cfg["depth"]), entries, cfg.get("default"))
    raise ValueError(f"unknown strategy kind {kind!r}")


# ---------------------------------------------------------------------------
# models and paths


@dataclass(frozen=True)
class PathModel:
    theta: AmbiguitySet
    strategy: Strategy
    horizon: int
    truncation_r: float = 1.0

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 1.0 <= self.truncation_r < 2.0:
            raise ValueError("truncation r must lie in [1, 2)")
        self.strategy.validate(len(self.theta))


@dataclass
class SamplePath:
    values: np.ndarray
    chosen_indices: np.ndarray
    partial_sums: np.ndarray

    def __len__(self):
        return len(self.values)


def _member_arrays(theta: AmbiguitySet):
    args = [m._kernel_args for m in theta]
    width = max(len(a[5]) for a in args)
    k = len(args)
    vals = np.zeros((k, width))
    cum = np.ones((k, width))
    for i, a in enumerate(args):
        vals[i, :len(a[5])] = a[5]
        cum[i, :len(a[6])] = a[6]
    return (np.array([a[0] for a in args], dtype=np.int64),
            np.array([a[1] for a in args]), np.array([a[2] for a in args]),
            np.array([a[3] for a in args]), np.array([a[4] for a in args]),
            vals, cum, np.array([a[7] for a in args], dtype=np.int64))


def _strategy_arrays(strategy: Strategy):
    spec = strategy._kernel_spec()
    if spec is None:
        return None
    code, ints, level, genome = spec
    if genome is None:
        genome = np.zeros(1, dtype=np.int64)
    return np.int64(code), np.array(ints, dtype=np.int64), float(level), genome


def simulate(model: PathModel, seed: int, replication: int) -> SamplePath:
    """One path: X_j drawn from the member the strategy picks at step j."""
    strat = _strategy_arrays(model.strategy)
    if strat is not None:
        xs, idx, sums = _kernels.single_path(*_member_arrays(model.theta), *strat,
                                             np.uint64(seed), np.uint64(replication),
                                             model.horizon)
        return SamplePath(xs, idx, sums)
    return simulate_python(model, seed, replication)


def simulate_python(model: PathModel, seed: int, replication: int) -> SamplePath:
    """Step-by-step simulation through ``Strategy.choose``; handles any strategy."""
    n = model.horizon
    xs = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    sums = np.empty(n)
    history: list[float] = []
    s = c = 0.0
    for j in range(1, n + 1):
        k = model.strategy.choose(history, len(model.theta))
        x = model.theta[k].sample(seed, replication, j)
        t = s + x
        if abs(s) >= abs(x):
            c += (s - t) + x
        else:
            c += (x - t) + s
        s = t
        xs[j - 1], idx[j - 1], sums[j - 1] = x, k, s + c
        history.append(x)
    return SamplePath(xs, idx, sums)


@dataclass
class PathStatistics:
    """Per-replication summaries from one batch of simulated paths."""

    horizons: np.ndarray
    sums: np.ndarray          # (reps, len(horizons)): S_n at each horizon
    sup_upper: np.ndarray     # (reps, len(starts)): sup_{n0<=n<=N} (S_n - n c_hi)/n^(1/r)
    inf_lower: np.ndarray     # (reps, len(starts)): inf_{n0<=n<=N} (S_n - n c_lo)/n^(1/r)
    clamped: np.ndarray       # (reps,): #{j <= N : |X_j| >= j^(1/r)}
    starts: np.ndarray


def normaliser(n_max: int, r: float) -> np.ndarray:
    """``norm[n] = n ** (1/r)`` for n = 0..n_max (index 0 unused)."""
    return np.arange(n_max + 1, dtype=float) ** (1.0 / r)


def path_statistics(theta: AmbiguitySet, strategy: Strategy, horizons: Sequence[int],
                    replications: int, seed: int, r: float = 1.0,
                    starts: Sequence[int] | None = None, center_hi: float | None = None,
                    center_lo: float | None = None, threads: int = 1,
                    rep_start: int = 0) -> PathStatistics:
    """Simulate ``replications`` paths to ``max(horizons)`` and summarise them.

    Replications are split into contiguous chunks, one per thread; each is a
    pure function of ``(seed, replication)`` so output does not depend on
    ``threads``.
    """
    strategy.validate(len(theta))
    strat = _strategy_arrays(strategy)
    if strat is None:
        raise ValueError(f"{strategy.label} has no compiled form; use simulate_python")
    hz = np.array(sorted(set(int(h) for h in horizons)), dtype=np.int64)
    if hz[0] < 1:
        raise ValueError("horizons must be >= 1")
    st = np.array(sorted(set(int(s) for s in (starts or [hz[-1]]))), dtype=np.int64)
    c_hi = theta.mean_upper() if center_hi is None else center_hi
    c_lo = theta.mean_lower() if center_lo is None else center_lo
    norm = normaliser(int(hz[-1]), r)
    members = _member_arrays(theta)
    sums = np.zeros((replications, len(hz)))
    sup = np.zeros((replications, len(st)))
    inf = np.zeros((replications, len(st)))
    clamped = np.zeros(replications, dtype=np.int64)

    def run(lo, hi):
        if hi <= lo:
            return
        _kernels.path_statistics(*members, *strat, np.uint64(seed), np.uint64(rep_start + lo),
                                 hi - lo, hz, norm, st, float(c_hi), float(c_lo),
                                 sums[lo:hi], sup[lo:hi], inf[lo:hi], clamped[lo:hi])

    threads = max(1, int(threads))
    bounds = np.linspace(0, replications, threads + 1).astype(int)
    if threads == 1:
        run(0, replications)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run, bounds[:-1], bounds[1:]))
    return PathStatistics(hz, sums, sup, inf, clamped, st)


# ---------------------------------------------------------------------------
# audit


def histories(support: Sequence[float], depth: int):
    """All value histories of length 0..depth-1 (the conditioning sets F_{j-1})."""
    vals = [float(v) for v in support]
    for length in range(depth):
        yield from itertools.product(vals, repeat=length)


def pseudo_independence_audit(model: PathModel, phi_catalog: Sequence[TestFunction],
                              depth: int, tolerance: float = 1e-12,
                              kernel: Callable[[tuple], Distribution] | None = None) -> float:
    """Largest excess of E_P[phi(X_j) | history] outside [lower, upper].

    Enumerates every history of length < ``depth`` over the union support.
    ``kernel`` overrides the conditional law (the default is the member the
    strategy picks), which lets tests inject laws outside the set.
    """
    theta = model.theta
    if not theta.is_discrete:
        raise UnsupportedAuditError("exact audit needs all members discrete")
    if depth > 12:
        raise ValueError("audit depth is limited to 12")
    bands = [(lower_expectation(theta, phi), upper_expectation(theta, phi)) for phi in phi_catalog]
    cache: dict = {}
    worst = -math.inf
    for h in histories(theta.support(), depth):
        law = kernel(h) if kernel is not None else theta[model.strategy.choose(h, len(theta))]
        for i, phi in enumerate(phi_catalog):
            key = (id(law), i)
            if key not in cache:
                cache[key] = law.expect(phi)
            e = cache[key]
            lo, hi = bands[i]
            worst = max(worst, e - hi, lo - e)
    return float(worst)


def joint_upper_expectation(theta: AmbiguitySet, strategies: Sequence[Strategy],
                            phi: Callable[[float, float], float]) -> float:
    """sup over the given strategies of E[phi(X_1, X_2)] (discrete members)."""
    best = -math.inf
    for strat in strategies:
        k1 = strat.choose((), len(theta))
        v1, p1 = theta[k1].atoms()
        total = 0.0
        for x1, q1 in zip(v1, p1):
            k2 = strat.choose((float(x1),), len(theta))
            v2, p2 = theta[k2].atoms()
            total += q1 * float(np.dot(p2, [phi(x1, x2) for x2 in v2]))
        best = max(best, total)
    return best


def nested_upper_expectation(theta: AmbiguitySet, strategies: Sequence[Strategy],
                             phi: Callable[[float, float], float]) -> float:
    """E[E[phi(x, X_2)]|_{x = X_1}] with both layers taken over the strategies'
    one-step marginals: the value that nested (sequential) independence of X_2
    from X_1 would force."""
    firsts = {s.choose((), len(theta)) for s in strategies}
    seconds = {s.choose((float(x),), len(theta)) for s in strategies
               for k in firsts for x in theta[k].atoms()[0]}

    def inner(x1):
        return max(float(np.dot(theta[k].atoms()[1], [phi(x1, x2) for x2 in theta[k].atoms()[0]]))
                   for k in seconds)

    return max(float(np.dot(theta[k].atoms()[1], [inner(x) for x in theta[k].atoms()[0]]))
               for k in firsts)
