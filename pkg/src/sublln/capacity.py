"""Upper probabilities of path events: exact backward induction over adaptive
strategies for small discrete trees, strategy search plus Monte Carlo at scale."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .ambiguity import AmbiguitySet
from .sequences import (Constant, LastSign, Randomized, RoundRobin, Strategy, Table,
                        Threshold, histories, path_statistics)

MAX_DP_NODES = 1_000_000


class BudgetError(RuntimeError):
    """Exact evaluation would exceed the node budget."""


class ModelMismatchError(ValueError):
    """Estimates refer to different models."""


EVENT_KINDS = ("lower_dev", "upper_dev", "union_dev", "band", "custom_threshold")


@dataclass(frozen=True)
class PathEvent:
    """Event on S_n, with deviations scaled by n^(1/r).

    ``lower_dev``: (S_n - n c_lo) / n^(1/r) <= -eps;
    ``upper_dev``: (S_n - n c_hi) / n^(1/r) >= eps;
    ``union_dev``: either; ``band``: mu_lo - eps < S_n / n < mu_hi + eps;
    ``custom_threshold``: S_n >= threshold.  ``negated`` flips to the complement.
    """

    kind: str
    epsilon: float = 0.0
    r: float = 1.0
    center_hi: float = 0.0
    center_lo: float = 0.0
    mu_lo: float = 0.0
    mu_hi: float = 0.0
    threshold: float = 0.0
    negated: bool = False

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind != "custom_threshold" and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")

    def complement(self) -> "PathEvent":
        return replace(self, negated=not self.negated)

    def occurs(self, s_n, n: int):
        s_n = np.asarray(s_n, dtype=float)
        scale = n ** (1.0 / self.r)
        if self.kind == "custom_threshold":
            hit = s_n >= self.threshold
        elif self.kind == "band":
            avg = s_n / n
            hit = (self.mu_lo - self.epsilon < avg) & (avg < self.mu_hi + self.epsilon)
        else:
            low = (s_n - n * self.center_lo) / scale <= -self.epsilon
            high = (s_n - n * self.center_hi) / scale >= self.epsilon
            hit = low if self.kind == "lower_dev" else high if self.kind == "upper_dev" else low | high
        return ~hit if self.negated else hit

    @classmethod
    def for_theta(cls, kind: str, theta: AmbiguitySet, epsilon: float = 0.25,
                  r: float = 1.0, **kw) -> "PathEvent":
        """Event with centers set to the upper/lower member means of ``theta``."""
        hi, lo = theta.mean_upper(), theta.mean_lower()
        kw.setdefault("mu_hi", hi)
        kw.setdefault("mu_lo", lo)
        return cls(kind, epsilon, r, hi, lo, **kw)

    @classmethod
    def from_config(cls, cfg: dict, theta: AmbiguitySet, r: float = 1.0,
                    epsilon: float | None = None) -> "PathEvent":
        kind = cfg.get("kind", "union_dev")
        eps = float(cfg.get("epsilon", epsilon if epsilon is not None else 0.25))
        extra = {}
        if "threshold" in cfg or kind == "custom_threshold":
            extra["threshold"] = float(cfg.get("threshold", 0.0))
        for key in ("mu_lo", "mu_hi"):
            if key in cfg:
                extra[key] = float(cfg[key])
        ev = cls.for_theta(kind, theta, eps if kind != "custom_threshold" else max(eps, 1e-300),
                           float(cfg.get("r", r)), **extra)
        return ev.complement() if cfg.get("complement") else ev


@dataclass
class CapacityEstimate:
    value: float
    method: str
    best_strategy: Strategy | None
    mc_stderr: float = 0.0
    strategies_searched: int = 1
    model_key: tuple = field(default=(), repr=False)
    per_strategy: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.method not in ("exact_dp", "strategy_search"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "exact_dp" and self.mc_stderr != 0:
            raise ValueError("exact estimates carry no Monte Carlo error")
        self.value = min(1.0, max(0.0, float(self.value)))


def _atoms(theta: AmbiguitySet):
    if not theta.is_discrete:
        raise ValueError("exact evaluation needs all members discrete")
    return [tuple(zip(*(a.tolist() for a in m.atoms()))) for m in theta]


def _tree_size(m: int, n: int) -> int:
    return sum(m ** j for j in range(n + 1))


def _exact(theta: AmbiguitySet, n: int, event: PathEvent, maximize: bool,
           with_strategy: bool, max_nodes: int):
    if n < 1:
        raise ValueError("n must be >= 1")
    laws = _atoms(theta)
    support = theta.support()
    if _tree_size(len(support), n) > max_nodes:
        raise BudgetError(f"history tree of {_tree_size(len(support), n)} nodes exceeds "
                          f"budget {max_nodes}")
    better = (lambda a, b: a > b) if maximize else (lambda a, b: a < b)
    memo: dict = {}

    # events depend on the path through S_n only, so (depth, S) is a sufficient state
    def value(j, s):
        key = (j, s)
        if key in memo:
            return memo[key][0]
        if j == n:
            v = 1.0 if bool(event.occurs(s, n)) else 0.0
            memo[key] = (v, -1)
            return v
        best, arg = None, 0
        for k, law in enumerate(laws):
            v = 0.0
            for x, p in law:
                if p > 0:
                    v += p * value(j + 1, s + x)
            if best is None or better(v, best):  # ties keep the lowest index
                best, arg = v, k
        memo[key] = (best, arg)
        return best

    root = value(0, 0.0)
    strategy = None
    if with_strategy:
        entries = {}
        for h in histories(support, n):
            s = 0.0
            for x in h:
                s += x
            if (len(h), s) not in memo:
                value(len(h), s)
            entries[h] = memo[(len(h), s)][1]
        strategy = Table(n, entries)
    return root, strategy


def exact_upper_prob(theta: AmbiguitySet, n: int, event: PathEvent,
                     with_strategy: bool = True, max_nodes: int = MAX_DP_NODES) -> CapacityEstimate:
    """sup over all adaptive strategies of P(event) by backward induction."""
    v, strat = _exact(theta, n, event, True, with_strategy, max_nodes)
    return CapacityEstimate(v, "exact_dp", strat, 0.0, 1, _model_key(theta, n))


def exact_lower_prob(theta: AmbiguitySet, n: int, event: PathEvent,
                     with_strategy: bool = True, max_nodes: int = MAX_DP_NODES) -> CapacityEstimate:
    """inf over all adaptive strategies of P(event), computed directly (min-DP)."""
    v, strat = _exact(theta, n, event, False, with_strategy, max_nodes)
    return CapacityEstimate(v, "exact_dp", strat, 0.0, 1, _model_key(theta, n))


def _model_key(theta, n):
    return (theta, int(n))


def conjugate_lower(est: CapacityEstimate, est_c: CapacityEstimate) -> float:
    """Lower probability of A as 1 - V(A^c); ``est`` is the estimate for A."""
    if est.model_key and est_c.model_key and est.model_key != est_c.model_key:
        raise ModelMismatchError("estimates refer to different models")
    return 1.0 - est_c.value


# ---------------------------------------------------------------------------
# strategy search


@dataclass(frozen=True)
class StrategySearchConfig:
    """Strategy family searched for a lower bound on V(event).

    ``threshold_levels`` are drift levels c for the rule "hi if S_{j-1} <
    c (j-1)"; ``None`` means the member means plus their midpoint.
    """

    constant: bool = True
    round_robin: bool = True
    threshold_levels: tuple[float, ...] | None = None
    last_sign: bool = True
    random_genomes: int = 4
    genome_length: int = 16
    genome_seed: int = 20240601

    def strategies(self, theta: AmbiguitySet) -> list[Strategy]:
        k = len(theta)
        if k == 1:
            # every rule emits index 0, so all paths coincide
            return [Constant(0)]
        out: list[Strategy] = []
        if self.constant:
            out += [Constant(i) for i in range(k)]
        if self.round_robin:
            out.append(RoundRobin())
        levels = self.threshold_levels
        if levels is None:
            means = sorted({theta.mean_lower(), theta.mean_upper()})
            levels = tuple(sorted(set(means) | {0.5 * (means[0] + means[-1])}))
        for level in levels:
            for lo in range(k):
                for hi in range(k):
                    if lo != hi or k == 1:
                        out.append(Threshold(lo, hi, float(level)))
        if self.last_sign:
            out += [LastSign(a, b) for a in range(k) for b in range(k) if a != b or k == 1]
        rng = np.random.default_rng(self.genome_seed)
        for _ in range(self.random_genomes):
            out.append(Randomized(tuple(int(g) for g in rng.integers(0, k, self.genome_length))))
        seen, uniq = set(), []
        for s in out:
            if s not in seen:
                seen.add(s)
                uniq.append(s)
        return uniq

    @classmethod
    def from_config(cls, cfg: dict | None) -> "StrategySearchConfig":
        if not cfg:
            return cls()
        kw = dict(cfg)
        if kw.get("threshold_levels") is not None:
            kw["threshold_levels"] = tuple(float(x) for x in kw["threshold_levels"])
        return cls(**kw)


def search_upper_probs(theta: AmbiguitySet, horizons: Sequence[int], event: PathEvent,
                       family: StrategySearchConfig | Sequence[Strategy] | None = None,
                       replications: int = 10_000, seed: int = 0,
                       threads: int = 1) -> list[CapacityEstimate]:
    """Strategy-search estimates at several horizons from one batch of paths.

    Each value is the best Monte Carlo frequency over the family: a lower
    bound on V(event), never V itself.
    """
    if replications < 100:
        raise ValueError("strategy search needs at least 100 replications")
    strategies = (family or StrategySearchConfig())
    if isinstance(strategies, StrategySearchConfig):
        strategies = strategies.strategies(theta)
    horizons = sorted(set(int(h) for h in horizons))
    best = [(-1.0, None, 0.0) for _ in horizons]
    tables = [dict() for _ in horizons]
    for strat in strategies:
        stats = path_statistics(theta, strat, horizons, replications, seed, r=event.r,
                                threads=threads)
        for h, n in enumerate(horizons):
            p = float(np.mean(event.occurs(stats.sums[:, h], n)))
            tables[h][strat.label] = p
            if p > best[h][0]:
                best[h] = (p, strat, math.sqrt(p * (1.0 - p) / replications))
    return [CapacityEstimate(p, "strategy_search", s, se, len(strategies),
                             _model_key(theta, n), tables[h])
            for h, ((p, s, se), n) in enumerate(zip(best, horizons))]


def search_upper_prob(theta: AmbiguitySet, n: int, event: PathEvent,
                      family: StrategySearchConfig | Sequence[Strategy] | None = None,
                      replications: int = 10_000, seed: int = 0,
                      threads: int = 1) -> CapacityEstimate:
    return search_upper_probs(theta, [n], event, family, replications, seed, threads)[0]
