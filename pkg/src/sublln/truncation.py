"""Truncation Y_j = clamp(X_j, -j^(1/r), j^(1/r)) and the series that control
the three error terms of the truncation argument."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import special

from .ambiguity import AmbiguitySet, DominationCondition
from .distributions import Clamp, Distribution, NonIntegrableError, SymmetricPareto
from .sequences import SamplePath


@dataclass(frozen=True)
class TruncationScheme:
    r: float

    def __post_init__(self):
        if not 1.0 <= self.r < 2.0:
            raise ValueError(f"r must lie in [1, 2), got {self.r}")

    def level(self, j):
        """j^(1/r), vectorised."""
        return np.asarray(j, dtype=float) ** (1.0 / self.r) if np.ndim(j) else float(j) ** (1.0 / self.r)


def truncate(x, j, scheme: TruncationScheme):
    if np.any(np.asarray(j) < 1):
        raise ValueError("j must be >= 1")
    c = scheme.level(j)
    return np.clip(x, -c, c) if np.ndim(x) or np.ndim(j) else min(max(x, -c), c)


# ---------------------------------------------------------------------------
# member-wise exact quantities, vectorised over levels c


def excess_means(dist: Distribution, levels: np.ndarray) -> np.ndarray:
    """E[(|X| - c)^+] for each c in ``levels``."""
    at = dist.atoms()
    if at is not None:
        v, p = at
        return np.maximum(np.abs(v)[None, :] - levels[:, None], 0.0) @ p
    base, a, b = dist.affine()
    if base.alpha <= 1:
        raise NonIntegrableError("member mean diverges (alpha <= 1)")
    if a == 0:
        s, al = abs(b) * base.scale, base.alpha
        return np.where(levels >= s, s ** al * np.maximum(levels, s) ** (1 - al) / (al - 1),
                        (s - levels) + s / (al - 1))
    return np.array([dist.excess_mean(c) for c in levels])


def clamped_second_moments(dist: Distribution, levels: np.ndarray) -> np.ndarray:
    """E[min(X^2, c^2)] for each c in ``levels``."""
    at = dist.atoms()
    if at is not None:
        v, p = at
        return np.minimum((v * v)[None, :], (levels * levels)[:, None]) @ p
    base, a, b = dist.affine()
    if a == 0:
        s, al = abs(b) * base.scale, base.alpha
        c = np.maximum(levels, s)
        if al == 2.0:
            big = s * s + 2 * s * s * np.log(c / s)
        else:
            big = s * s + 2 * s ** al * (c ** (2 - al) - s ** (2 - al)) / (2 - al)
        return np.where(levels <= s, levels * levels, big)
    return np.array([dist.clamped_second_moment(c) for c in levels])


def abs_tails(dist: Distribution, levels: np.ndarray) -> np.ndarray:
    return np.array([dist.abs_tail_prob(c) for c in levels])


def clamped_mean(dist: Distribution, c: float) -> float:
    return dist.expect(Clamp(-c, c))


# ---------------------------------------------------------------------------
# decomposition


@dataclass
class Decomposition:
    T1: float
    T2: float
    T3: float
    T2_conditional: tuple[float, float]
    T3_bound: float


def decomposition_terms(path: SamplePath, theta: AmbiguitySet, scheme: TruncationScheme,
                        center: str = "upper") -> Decomposition:
    """Three-term split of n^(-1/r) sum (X_j - E[X_j]).

    T1 = n^(-1/r) sum |X_j - Y_j|, T2 = n^(-1/r) sum (Y_j - c_j) with c_j the
    upper (or lower) expectation of Y_j, T3 = n^(-1/r) sum |E[Y_j] - E[X_j]|.
    ``T2_conditional`` brackets the conditionally centred T2 using the
    extreme member means of Y_j; ``T3_bound`` is n^(-1/r) sum E[(|X_j| - j^(1/r))^+].
    """
    if center not in ("upper", "lower"):
        raise ValueError("center must be 'upper' or 'lower'")
    x = np.asarray(path.values, dtype=float)
    n = len(x)
    j = np.arange(1, n + 1)
    levels = scheme.level(j)
    y = np.clip(x, -levels, levels)
    means = [m.mean() for m in theta]
    ex = max(means) if center == "upper" else min(means)
    ey_members = np.array([[clamped_mean(m, c) for c in levels] for m in theta])
    ey_hi, ey_lo = ey_members.max(axis=0), ey_members.min(axis=0)
    ey = ey_hi if center == "upper" else ey_lo
    norm = n ** (1.0 / scheme.r)
    excess = np.max([excess_means(m, levels) for m in theta], axis=0)
    return Decomposition(
        T1=math.fsum(np.abs(x - y)) / norm,
        T2=math.fsum(y - ey) / norm,
        T3=math.fsum(np.abs(ey - ex)) / norm,
        T2_conditional=(math.fsum(y - ey_hi) / norm, math.fsum(y - ey_lo) / norm),
        T3_bound=math.fsum(excess) / norm,
    )


# ---------------------------------------------------------------------------
# series


@dataclass
class SeriesReport:
    partial_sums: np.ndarray            # partial_sums[N-1] = sum_{j<=N}
    closed_form_bound: float
    remainder: float = math.nan         # bound on sum_{j>N}
    converged: bool = False
    terms: np.ndarray = field(default=None, repr=False)
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def N(self) -> int:
        return len(self.partial_sums)

    @property
    def total(self) -> float:
        return float(self.partial_sums[-1])

    @property
    def slack(self) -> float:
        return self.closed_form_bound - self.total

    def checkpoints(self) -> list[int]:
        pts = [10 ** k for k in range(int(math.log10(self.N)) + 1) if 10 ** k <= self.N]
        return sorted(set(pts + [self.N]))

    def rows(self):
        for n in self.checkpoints():
            rem = self.remainder if n == self.N else math.nan
            yield n, float(self.partial_sums[n - 1]), self.closed_form_bound, rem

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "partial_sum", "bound", "remainder"])
        for n, s, b, rem in self.rows():
            w.writerow([n, repr(s), repr(b), repr(rem)])
        return buf.getvalue()


def _cumsum(terms: np.ndarray) -> np.ndarray:
    # fixed left-to-right order keeps results reproducible across runs
    return np.cumsum(terms)


def _dominating_pareto(cond: DominationCondition):
    base, a, b = cond.dominating.affine()
    if isinstance(base, SymmetricPareto) and a == 0 and b != 0:
        return base.alpha, abs(b) * base.scale
    return None


def _dominating_bound(cond: DominationCondition):
    at = cond.dominating.atoms()
    if at is not None:
        return float(np.max(np.abs(at[0])))
    return None


def _power_tail_sum(N: int, a: float) -> float:
    """Upper bound on sum_{j>N} j^(-a) for a > 1."""
    return N ** (1.0 - a) / (a - 1.0)


def step1_series(theta: AmbiguitySet, scheme: TruncationScheme, N: int,
                 cond: DominationCondition) -> SeriesReport:
    """sum_j E[(|X_j| - j^(1/r))^+] / j^(1/r) against 2C/(r-1) C_V(|X|^r).

    For r = 1 the Cesaro route is reported instead: ``extras['per_j']``
    holds E[(|X_j| - j)^+], ``extras['cesaro']`` its running averages and
    ``extras['per_j_bound']`` the bound C(V(|X| >= j) + int_j^inf V(|X| >= t) dt).
    """
    r = scheme.r
    j = np.arange(1, N + 1, dtype=float)
    levels = scheme.level(j)
    try:
        excess = np.max([excess_means(m, levels) for m in theta], axis=0)
    except NonIntegrableError:
        return SeriesReport(np.full(N, math.inf), math.inf, math.inf, False)
    C = cond.constant_C
    if r == 1.0:
        per_j_bound = np.array([C * (cond.dominating_tail(t) + cond.dominating.excess_mean(t))
                                for t in levels]) if cond.dominating.tail_index > 1 else \
            np.full(N, math.inf)
        rep = SeriesReport(_cumsum(excess / levels), math.inf, math.inf, False, excess / levels)
        rep.extras = {"per_j": excess, "cesaro": _cumsum(excess) / j, "per_j_bound": per_j_bound}
        return rep
    if not cond.moment_finite:
        return SeriesReport(_cumsum(excess / levels), math.inf, math.inf, False, excess / levels)
    bound = 2.0 * C / (r - 1.0) * cond.choquet_moment()
    terms = excess / levels
    remainder = math.nan
    par = _dominating_pareto(cond)
    top = _dominating_bound(cond)
    if par is not None:
        al, s = par
        # E[(|X_j|-c)^+]/c <= C s^al c^(-al)/(al-1) for c >= s; c = j^(1/r)
        if levels[-1] >= s:
            remainder = C * s ** al / (al - 1) * _power_tail_sum(N, al / r)
    elif top is not None:
        remainder = 0.0 if (N + 1) ** (1 / r) >= top else math.nan
    return SeriesReport(_cumsum(terms), bound, remainder, math.isfinite(bound), terms)


def step2_series(theta: AmbiguitySet, scheme: TruncationScheme, N: int,
                 cond: DominationCondition) -> SeriesReport:
    """sum_j E[Y_j^2] / j^(2/r) against (1+4C) zeta(2/r) + 8rC/(2-r) C_V(|X|^r)."""
    r = scheme.r
    j = np.arange(1, N + 1, dtype=float)
    levels = scheme.level(j)
    second = np.max([clamped_second_moments(m, levels) for m in theta], axis=0)
    terms = second / j ** (2.0 / r)
    C = cond.constant_C
    if cond.moment_finite:
        bound = (1 + 4 * C) * float(special.zeta(2.0 / r)) + 8 * r * C / (2 - r) * cond.choquet_moment()
    else:
        bound = math.inf
    remainder = math.nan
    par = _dominating_pareto(cond)
    top = _dominating_bound(cond)
    if par is not None:
        al, s = par
        if al < 2:
            # E[min(X^2, c^2)] <= C * 2 s^al c^(2-al)/(2-al)  =>  term <= const * j^(-al/r)
            remainder = C * 2 * s ** al / (2 - al) * _power_tail_sum(N, al / r)
        elif al > 2:
            remainder = C * al * s * s / (al - 2) * _power_tail_sum(N, 2.0 / r)
    elif top is not None:
        remainder = C * top * top * _power_tail_sum(N, 2.0 / r)
    return SeriesReport(_cumsum(terms), bound, remainder, math.isfinite(bound), terms,
                        {"second_moments": second})


def borel_cantelli_budget(theta: AmbiguitySet, scheme: TruncationScheme, N: int,
                          cond: DominationCondition) -> SeriesReport:
    """sum_j V(|X_j| >= j^(1/r)) against C * C_V(|X|^r)."""
    r = scheme.r
    levels = scheme.level(np.arange(1, N + 1, dtype=float))
    terms = np.max([abs_tails(m, levels) for m in theta], axis=0)
    C = cond.constant_C
    bound = C * cond.choquet_moment() if cond.moment_finite else math.inf
    remainder = math.nan
    par = _dominating_pareto(cond)
    top = _dominating_bound(cond)
    if par is not None:
        al, s = par
        remainder = C * s ** al * _power_tail_sum(N, al / r)
    elif top is not None:
        remainder = 0.0 if (N + 1) ** (1 / r) > top else math.nan
    return SeriesReport(_cumsum(terms), bound, remainder, math.isfinite(bound), terms)


def clamp_count_moments(theta: AmbiguitySet, scheme: TruncationScheme, n: int,
                        member: int = 0) -> tuple[float, float]:
    """Mean and variance of #{j <= n : |X_j| >= j^(1/r)} when every step uses ``member``."""
    p = abs_tails(theta[member], scheme.level(np.arange(1, n + 1, dtype=float)))
    return float(np.sum(p)), float(np.sum(p * (1 - p)))


# ---------------------------------------------------------------------------
# pointwise bounds behind the series bounds, checked as inequalities


def step1_pointwise_bound(j: int, scheme: TruncationScheme, cond: DominationCondition,
                          i_max: int = 200_000) -> float:
    """(C/r) V(|X| >= j^(1/r)) + (C/r) sum_{i>j} i^(1/r-1) V(|X|^r >= i), for r > 1."""
    r, C = scheme.r, cond.constant_C
    i = np.arange(j + 1, i_max + 1, dtype=float)
    tail = np.array([cond.dominating_tail(t) for t in i ** (1 / r)])
    total = C / r * cond.dominating_tail(j ** (1 / r)) + C / r * math.fsum(i ** (1 / r - 1) * tail)
    par = _dominating_pareto(cond)
    if par is not None:
        al, s = par
        # remaining i > i_max: i^(1/r-1) (s^r/i)^(al/r) summed
        total += C / r * s ** al * _power_tail_sum(i_max, 1 - 1 / r + al / r)
    return total


def step2_pointwise_bound(j: int, scheme: TruncationScheme, cond: DominationCondition) -> float:
    """1 + 4C sum_{i<=j} i^(2/r-1) V(|X| >= i^(1/r))."""
    r, C = scheme.r, cond.constant_C
    i = np.arange(1, j + 1, dtype=float)
    tail = np.array([cond.dominating_tail(t) for t in i ** (1 / r)])
    return 1.0 + 4.0 * C * math.fsum(i ** (2 / r - 1) * tail)


def step1_summation_check(r: float, i_values: Sequence[int] = range(2, 51)) -> list[tuple[int, float, float]]:
    """(i, sum_{j<i} j^(-1/r), r/(r-1) i^(1-1/r)) for each i; needs r > 1."""
    if not r > 1:
        raise ValueError("the r/(r-1) comparison needs r > 1")
    out = []
    for i in i_values:
        lhs = math.fsum(j ** (-1.0 / r) for j in range(1, i))
        out.append((i, lhs, r / (r - 1) * i ** (1 - 1 / r)))
    return out


def step2_summation_check(r: float, i_values: Sequence[int] = range(2, 51)) -> list[tuple[int, float, float]]:
    """(i, sum_{j>=i} j^(-2/r), r/(2-r) (i-1)^(1-2/r)); the infinite sum is a Hurwitz zeta."""
    out = []
    for i in i_values:
        lhs = float(special.zeta(2.0 / r, i))
        out.append((i, lhs, r / (2 - r) * (i - 1) ** (1 - 2 / r)))
    return out


# ---------------------------------------------------------------------------
# Kronecker


@dataclass
class KroneckerReport:
    series: np.ndarray          # partial sums of x_n / b_n
    averages: np.ndarray        # b_N^{-1} sum_{k<=N} x_k
    series_converged: bool
    averages_vanishing: bool

    @property
    def consistent(self) -> bool:
        return (not self.series_converged) or self.averages_vanishing


def kronecker_check(x_seq, b_seq, tol: float = 1e-3) -> KroneckerReport:
    """Numerical reading of Kronecker's lemma on finite prefixes.

    The series counts as converged when its last half moved by at most
    ``tol`` (relative to max(1, |sum|)); averages vanish when the final one is
    within ``tol`` of 0.
    """
    x = np.asarray(x_seq, dtype=float)
    b = np.asarray(b_seq, dtype=float)
    if x.shape != b.shape or x.ndim != 1 or len(x) == 0:
        raise ValueError("x and b must be nonempty sequences of equal length")
    if np.any(b <= 0) or np.any(np.diff(b) <= 0):
        raise ValueError("b must be positive and strictly increasing")
    series = np.cumsum(x / b)
    averages = np.cumsum(x) / b
    half = len(x) // 2
    drift = float(np.max(np.abs(series[half:] - series[-1]))) if half else math.inf
    conv = drift <= tol * max(1.0, abs(series[-1]))
    vanish = abs(averages[-1]) <= tol
    return KroneckerReport(series, averages, bool(conv), bool(vanish))
