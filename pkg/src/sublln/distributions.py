"""Single-measure laws and the bounded Lipschitz test-function catalog.

Every law here is ``offset + factor * base`` with ``base`` either a finite
discrete law or a symmetric Pareto law.  Tail probabilities and expectations
are exact (discrete) or closed form / adaptive quadrature (Pareto), and
sampling is a deterministic function of ``(seed, replication, step)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from . import _kernels

PROB_TOL = 1e-12
QUAD_EPSABS = 1e-11


class DistributionError(ValueError):
    """Invalid distribution parameters."""


class NonIntegrableError(ArithmeticError):
    """A requested tail integral diverges."""


# ---------------------------------------------------------------------------
# test functions


class TestFunction:
    """Bounded Lipschitz function from a fixed catalog.

    Subclasses provide ``__call__`` (vectorised), ``lipschitz_constant``,
    ``sup_bound`` and ``breakpoints`` (kinks, used to split quadrature).
    """

    __test__ = False  # not a pytest class

    lipschitz_constant: float
    sup_bound: float

    def __call__(self, x):
        raise NotImplementedError

    def breakpoints(self) -> tuple[float, ...]:
        return ()

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Combination(((1.0, self),), float(other))
        return Combination(((1.0, self),)) + other

    __radd__ = __add__

    def __mul__(self, lam):
        return Combination(((float(lam), self),))

    __rmul__ = __mul__


@dataclass(frozen=True)
class Clamp(TestFunction):
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("clamp needs lo <= hi")

    def __call__(self, x):
        return np.clip(x, self.lo, self.hi)

    @property
    def lipschitz_constant(self):
        return 0.0 if self.lo == self.hi else 1.0

    @property
    def sup_bound(self):
        return max(abs(self.lo), abs(self.hi))

    def breakpoints(self):
        return (self.lo, self.hi)


def constant(c: float) -> Clamp:
    return Clamp(c, c)


@dataclass(frozen=True)
class SmoothedIndicator(TestFunction):
    """0 below x0, 1 above x0 + eps, linear in between.

    Sandwiched as ``I[x0+eps, inf) <= phi <= I[x0, inf)``.
    """

    x0: float
    eps: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    def __call__(self, x):
        return np.clip((np.asarray(x, dtype=float) - self.x0) / self.eps, 0.0, 1.0)

    @property
    def lipschitz_constant(self):
        return 1.0 / self.eps

    @property
    def sup_bound(self):
        return 1.0

    def breakpoints(self):
        return (self.x0, self.x0 + self.eps)


@dataclass(frozen=True)
class AffineClamped(TestFunction):
    slope: float
    intercept: float
    bound: float

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError("bound must be nonnegative")

    def __call__(self, x):
        return np.clip(self.slope * np.asarray(x, dtype=float) + self.intercept,
                       -self.bound, self.bound)

    @property
    def lipschitz_constant(self):
        return abs(self.slope)

    @property
    def sup_bound(self):
        return self.bound

    def breakpoints(self):
        if self.slope == 0:
            return ()
        return tuple(sorted(((-self.bound - self.intercept) / self.slope,
                             (self.bound - self.intercept) / self.slope)))


@dataclass(frozen=True)
class PowerClamped(TestFunction):
    """min(|x|^p, bound) with p >= 1."""

    p: float
    bound: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("p must be >= 1 for a Lipschitz power")
        if self.bound < 0:
            raise ValueError("bound must be nonnegative")

    def __call__(self, x):
        return np.minimum(np.abs(np.asarray(x, dtype=float)) ** self.p, self.bound)

    @property
    def lipschitz_constant(self):
        return self.p * self.bound ** ((self.p - 1) / self.p)

    @property
    def sup_bound(self):
        return self.bound

    def breakpoints(self):
        k = self.bound ** (1.0 / self.p)
        return (-k, 0.0, k)


@dataclass(frozen=True)
class Combination(TestFunction):
    """Finite weighted sum of catalog members plus a constant."""

    terms: tuple[tuple[float, TestFunction], ...]
    constant: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.constant)
        for w, f in self.terms:
            out = out + w * f(x)
        return out

    @property
    def lipschitz_constant(self):
        return sum(abs(w) * f.lipschitz_constant for w, f in self.terms)

    @property
    def sup_bound(self):
        return sum(abs(w) * f.sup_bound for w, f in self.terms) + abs(self.constant)

    def breakpoints(self):
        return tuple(sorted({p for _, f in self.terms for p in f.breakpoints()}))

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Combination(self.terms, self.constant + other)
        if isinstance(other, Combination):
            return Combination(self.terms + other.terms, self.constant + other.constant)
        return Combination(self.terms + ((1.0, other),), self.constant)

    __radd__ = __add__

    def __mul__(self, lam):
        lam = float(lam)
        return Combination(tuple((lam * w, f) for w, f in self.terms), lam * self.constant)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# distributions


class Distribution:
    """Law of ``offset + factor * base``; see module docstring."""

    def affine(self) -> tuple["Distribution", float, float]:
        raise NotImplementedError

    # -- structure -------------------------------------------------------
    @property
    def is_discrete(self) -> bool:
        return isinstance(self.affine()[0], Discrete)

    @property
    def tail_index(self) -> float:
        """Pareto tail index of the base law, ``inf`` for bounded laws."""
        base, _, b = self.affine()
        if isinstance(base, SymmetricPareto) and b != 0:
            return base.alpha
        return math.inf

    def atoms(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Sorted support values and probabilities, ``None`` if continuous."""
        base, a, b = self.affine()
        if isinstance(base, SymmetricPareto):
            if b == 0:
                return np.array([a]), np.array([1.0])
            return None
        vals = a + b * base._values
        probs = base._probs
        order = np.argsort(vals, kind="stable")
        vals, probs = vals[order], probs[order]
        uniq, inv = np.unique(vals, return_inverse=True)
        merged = np.zeros(len(uniq))
        np.add.at(merged, inv, probs)
        return uniq, merged

    def jump_points(self) -> tuple[float, ...]:
        """Points where tail functions of this law are not smooth."""
        at = self.atoms()
        if at is not None:
            return tuple(float(v) for v in at[0])
        base, a, b = self.affine()
        return (a - abs(b) * base.scale, a, a + abs(b) * base.scale)

    # -- probabilities -------------------------------------------------------
    def _prob(self, op: str, t: float) -> float:
        at = self.atoms()
        if at is not None:
            vals, probs = at
            if op == "ge":
                mask = vals >= t
            elif op == "gt":
                mask = vals > t
            elif op == "le":
                mask = vals <= t
            else:
                mask = vals < t
            return float(np.sum(probs[mask]))
        base, a, b = self.affine()
        x = (t - a) / b
        if b < 0:
            op = {"ge": "le", "gt": "lt", "le": "ge", "lt": "gt"}[op]
        if op in ("ge", "gt"):
            return base._sf(x)
        return base._sf(-x)

    def tail_prob(self, t: float) -> float:
        """P(X >= t)."""
        return self._prob("ge", t)

    def cdf(self, t: float) -> float:
        """P(X <= t)."""
        return self._prob("le", t)

    def prob_lt(self, t: float) -> float:
        """P(X < t), computed directly rather than as ``1 - tail_prob``."""
        return self._prob("lt", t)

    def abs_tail_prob(self, t: float) -> float:
        """P(|X| >= t)."""
        if t <= 0:
            return 1.0
        return self._prob("ge", t) + self._prob("le", -t)

    # -- expectations --------------------------------------------------------
    def mean(self) -> float:
        base, a, b = self.affine()
        if isinstance(base, Discrete):
            return float(a + b * np.dot(base._probs, base._values))
        if b != 0 and base.alpha <= 1:
            raise NonIntegrableError(f"Pareto member with alpha={base.alpha} has no mean")
        return float(a)

    def expect(self, f: TestFunction) -> float:
        base, a, b = self.affine()
        if isinstance(base, Discrete) or b == 0:
            vals, probs = self.atoms()
            return float(np.dot(probs, f(vals)))
        s, alpha = base.scale, base.alpha
        # in u = log(x / s) the symmetrised integrand is smooth between kinks;
        # beyond the last kink every catalog function is constant
        cuts = sorted({math.log(abs((y0 - a) / b) / s) for y0 in f.breakpoints()
                       if abs((y0 - a) / b) > s})
        edges = [0.0] + cuts

        def g(u):
            x = b * s * math.exp(u)
            return 0.5 * (float(f(a + x)) + float(f(a - x))) * alpha * math.exp(-alpha * u)

        total = 0.0
        for lo, hi in zip(edges, edges[1:]):
            val, _ = integrate.quad(g, lo, hi, epsabs=QUAD_EPSABS, epsrel=1e-13, limit=500)
            total += val
        far = b * s * math.exp(edges[-1] + 1.0)
        total += 0.5 * (float(f(a + far)) + float(f(a - far))) * math.exp(-alpha * edges[-1])
        return float(total)

    def excess_mean(self, c: float) -> float:
        """E[(|X| - c)^+] for c >= 0."""
        at = self.atoms()
        if at is not None:
            vals, probs = at
            return float(np.dot(probs, np.maximum(np.abs(vals) - c, 0.0)))
        base, a, b = self.affine()
        if base.alpha <= 1:
            raise NonIntegrableError("E|X| diverges for alpha <= 1")
        if a == 0:
            return _pareto_excess(base.alpha, abs(b) * base.scale, c)
        return integrate_tail(self.abs_tail_prob, self.abs_jump_points(), base.alpha, start=c)

    def clamped_second_moment(self, c: float) -> float:
        """E[min(X^2, c^2)] = E[Y^2] for Y the clamp of X to [-c, c]."""
        at = self.atoms()
        if at is not None:
            vals, probs = at
            return float(np.dot(probs, np.minimum(vals * vals, c * c)))
        base, a, b = self.affine()
        if a == 0:
            return _pareto_clamped_square(base.alpha, abs(b) * base.scale, c)
        pts = [p for p in self.abs_jump_points() if 0 < p < c]
        val, _ = integrate.quad(lambda t: 2.0 * t * self.abs_tail_prob(t), 0.0, c,
                                points=pts or None, epsabs=1e-10, epsrel=1e-12, limit=500)
        return float(val)

    def abs_jump_points(self) -> tuple[float, ...]:
        return tuple(sorted({abs(p) for p in self.jump_points()}))

    # -- sampling ------------------------------------------------------------
    @cached_property
    def _kernel_args(self):
        base, a, b = self.affine()
        if isinstance(base, Discrete):
            vals = base._values
            cum = np.cumsum(base._probs)
            cum[-1] = 1.0
            return (_kernels.KIND_DISCRETE, float(a), float(b), 1.0, 1.0, vals, cum, len(vals))
        one = np.zeros(1)
        return (_kernels.KIND_PARETO, float(a), float(b), base.alpha, base.scale, one, one, 1)

    def sample(self, seed: int, replication: int, step: int) -> float:
        u = _kernels.uniform(np.uint64(seed), np.uint64(replication), np.uint64(step))
        return float(_kernels.draw(*self._kernel_args, u))

    def sample_block(self, seed: int, replication: int, steps) -> np.ndarray:
        steps = np.ascontiguousarray(steps, dtype=np.uint64)
        return _kernels.draw_block(*self._kernel_args, np.uint64(seed),
                                   np.uint64(replication), steps)


@dataclass(frozen=True)
class Discrete(Distribution):
    support: tuple[tuple[float, float], ...]

    def __post_init__(self):
        sup = tuple((float(v), float(p)) for v, p in self.support)
        if not sup:
            raise DistributionError("discrete law needs a nonempty support")
        vals = [v for v, _ in sup]
        probs = [p for _, p in sup]
        if any(not math.isfinite(v) for v in vals):
            raise DistributionError("support values must be finite")
        if any(p < 0 for p in probs):
            raise DistributionError("probabilities must be nonnegative")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise DistributionError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        if any(v2 <= v1 for v1, v2 in zip(vals, vals[1:])):
            raise DistributionError("support values must be strictly increasing")
        object.__setattr__(self, "support", sup)
        object.__setattr__(self, "_values", np.array(vals))
        object.__setattr__(self, "_probs", np.array(probs))

    def affine(self):
        return self, 0.0, 1.0


@dataclass(frozen=True)
class SymmetricPareto(Distribution):
    """Density proportional to |x|^(-alpha-1) on |x| >= scale."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise DistributionError("alpha must be positive and finite")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise DistributionError("scale must be positive and finite")

    def affine(self):
        return self, 0.0, 1.0

    def _sf(self, x: float) -> float:
        s = self.scale
        if x >= s:
            return 0.5 * (s / x) ** self.alpha
        if x > -s:
            return 0.5
        return 1.0 - 0.5 * (s / -x) ** self.alpha


@dataclass(frozen=True)
class Shifted(Distribution):
    base: Distribution
    offset: float

    def __post_init__(self):
        if not math.isfinite(self.offset):
            raise DistributionError("offset must be finite")

    def affine(self):
        base, a, b = self.base.affine()
        return base, a + self.offset, b


@dataclass(frozen=True)
class Scaled(Distribution):
    base: Distribution
    factor: float

    def __post_init__(self):
        if not math.isfinite(self.factor):
            raise DistributionError("factor must be finite")

    def affine(self):
        base, a, b = self.base.affine()
        return base, a * self.factor, b * self.factor


def point_mass(c: float) -> Discrete:
    return Discrete(((c, 1.0),))


def bernoulli(p: float) -> Discrete:
    return Discrete(((0.0, 1.0 - p), (1.0, p)))


def two_point(lo: float, hi: float, p_hi: float = 0.5) -> Discrete:
    return Discrete(((lo, 1.0 - p_hi), (hi, p_hi)))


# free-function forms of the methods above
def expect(dist: Distribution, f: TestFunction) -> float:
    return dist.expect(f)


def tail_prob(dist: Distribution, t: float) -> float:
    return dist.tail_prob(t)


def abs_tail_prob(dist: Distribution, t: float) -> float:
    return dist.abs_tail_prob(t)


def sample(dist: Distribution, seed: int, replication: int, step: int) -> float:
    return dist.sample(seed, replication, step)


# ---------------------------------------------------------------------------
# closed forms and tail integration


def _pareto_excess(alpha: float, s: float, c: float) -> float:
    # int_c^inf P(|X| >= t) dt with P(|X| >= t) = min(1, (s/t)^alpha)
    if c >= s:
        return s ** alpha * c ** (1.0 - alpha) / (alpha - 1.0)
    return (s - c) + s / (alpha - 1.0)


def _pareto_clamped_square(alpha: float, s: float, c: float) -> float:
    # int_0^c 2t min(1, (s/t)^alpha) dt
    if c <= s:
        return c * c
    if alpha == 2.0:
        return s * s + 2.0 * s * s * math.log(c / s)
    return s * s + 2.0 * s ** alpha * (c ** (2.0 - alpha) - s ** (2.0 - alpha)) / (2.0 - alpha)


def integrate_tail(fn: Callable[[float], float], breakpoints: Sequence[float],
                   decay: float, start: float = 0.0, epsabs: float = 1e-10) -> float:
    """Integral of a nonnegative tail function over [start, inf).

    ``fn`` must decay like ``t**(-decay)`` with ``decay > 1`` (``inf`` for a
    tail that vanishes beyond the last breakpoint).  The body is integrated
    piecewise between breakpoints; beyond ``T`` the substitution
    ``t = T * w**(-1/(decay-1))`` turns a pure power tail into a constant
    integrand on (0, 1].
    """
    if not decay > 1:
        raise NonIntegrableError(f"tail decays like t^-{decay}, not integrable")
    pts = sorted({float(p) for p in breakpoints if p > start})
    if math.isinf(decay):
        if not pts:
            return 0.0
        top = pts[-1]
        inner = [p for p in pts if p < top]
        val, _ = integrate.quad(fn, start, top, points=inner or None, epsabs=epsabs,
                                epsrel=1e-12, limit=500)
        return float(val)
    top = 2.0 * max(pts[-1] if pts else 0.0, start, 0.5)
    inner = [p for p in pts if p < top]
    body, _ = integrate.quad(fn, start, top, points=inner or None, epsabs=epsabs,
                             epsrel=1e-12, limit=500)
    k = 1.0 / (decay - 1.0)

    def g(w):
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            t = top * w ** (-k)
            val = fn(t) * top * k * w ** (-k - 1.0)
        return val if math.isfinite(val) else 0.0

    tail, _ = integrate.quad(g, 0.0, 1.0, epsabs=epsabs, epsrel=1e-12, limit=500)
    return float(body + tail)


# ---------------------------------------------------------------------------
# config grammar


def from_config(cfg: dict) -> Distribution:
    """Build a law from its JSON form.

    ``{"kind": "discrete", "support": [[v, p], ...]}``,
    ``{"kind": "pareto", "alpha": a, "scale": s}``,
    ``{"kind": "shift", "offset": o, "base": {...}}``,
    ``{"kind": "scale", "factor": f, "base": {...}}``.
    """
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise DistributionError("distribution must be an object with a 'kind'")
    kind = cfg["kind"]
    if kind == "discrete":
        try:
            return Discrete(tuple((v, p) for v, p in cfg["support"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DistributionError):
                raise
            raise DistributionError(f"bad discrete support: {exc}") from exc
    if kind == "pareto":
        return SymmetricPareto(float(cfg["alpha"]), float(cfg.get("scale", 1.0)))
    if kind in ("point", "delta"):
        return point_mass(float(cfg["value"]))
    if kind == "bernoulli":
        return bernoulli(float(cfg["p"]))
    if kind in ("shift", "shifted"):
        return Shifted(from_config(cfg["base"]), float(cfg["offset"]))
    if kind in ("scale", "scaled"):
        return Scaled(from_config(cfg["base"]), float(cfg["factor"]))
    raise DistributionError(f"unknown distribution kind {kind!r}")


def to_config(dist: Distribution) -> dict:
    if isinstance(dist, Discrete):
        return {"kind": "discrete", "support": [list(vp) for vp in dist.support]}
    if isinstance(dist, SymmetricPareto):
        return {"kind": "pareto", "alpha": dist.alpha, "scale": dist.scale}
    if isinstance(dist, Shifted):
        return {"kind": "shift", "offset": dist.offset, "base": to_config(dist.base)}
    return {"kind": "scale", "factor": dist.factor, "base": to_config(dist.base)}
