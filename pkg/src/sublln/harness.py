"""Scenario experiments for the weak, strong and Kolmogorov-type laws, rate
fitting and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .ambiguity import AmbiguitySet, DominationCondition, verify_domination
from .capacity import (MAX_DP_NODES, CapacityEstimate, PathEvent, exact_upper_prob,
                       search_upper_probs)
from .config import ScenarioConfig
from .sequences import path_statistics

ROW_FIELDS = ("scenario", "n", "event", "method", "value", "stderr", "center_hi",
              "center_lo", "wall_ms")
EXACT_MAX_N = 12


class DominationViolation(RuntimeError):
    """The scenario's laws are not dominated as declared; experiments refuse to run."""


@dataclass
class ExperimentRow:
    scenario: str
    n: int
    event: str
    method: str
    value: float
    stderr: float
    center_hi: float
    center_lo: float
    wall_ms: float = 0.0
    strategy: str = ""

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("capacity estimates lie in [0, 1]")


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    target_slope: float = math.nan
    passed: bool = False


@dataclass
class SllnReport:
    scenario: str
    n_max: int
    starts: list[int]
    delta: float
    fractions: dict = field(default_factory=dict)   # label -> {"upper","lower","union"}: list

    def worst(self, which: str = "union") -> list[float]:
        return [max(f[which][g] for f in self.fractions.values()) for g in range(len(self.starts))]

    @property
    def passed(self) -> bool:
        return all(all(b <= a for a, b in zip(f["union"], f["union"][1:]))
                   for f in self.fractions.values())


def check_domination(cfg: ScenarioConfig, tol: float = 1e-12) -> float:
    v = verify_domination(cfg.domination, cfg.theta)
    if v > tol:
        raise DominationViolation(f"domination violated by {v:.3g} in scenario {cfg.name!r}")
    if not cfg.domination.moment_finite:
        raise DominationViolation("dominating law has infinite r-th Choquet moment")
    return v


def _exact_ok(theta: AmbiguitySet, n: int) -> bool:
    if n > EXACT_MAX_N or not theta.is_discrete:
        return False
    m = len(theta.support())
    return sum(m ** j for j in range(n + 1)) <= MAX_DP_NODES


def _estimates(theta, horizons, event, cfg, threads, use_exact=True):
    """Per-horizon estimates: exact DP where feasible, strategy search otherwise."""
    out: dict[int, tuple[CapacityEstimate, float]] = {}
    searched = [n for n in horizons if not (use_exact and _exact_ok(theta, n))]
    for n in horizons:
        if n not in searched:
            t0 = time.perf_counter()
            est = exact_upper_prob(theta, n, event, with_strategy=False)
            out[n] = (est, 1e3 * (time.perf_counter() - t0))
    if searched:
        t0 = time.perf_counter()
        ests = search_upper_probs(theta, searched, event, cfg.search_family(),
                                  cfg.replications, cfg.seed, threads)
        ms = 1e3 * (time.perf_counter() - t0)
        for n, est in zip(searched, ests):
            out[n] = (est, ms)
    return [out[n] for n in horizons]


def _label(est):
    return est.best_strategy.label if est.best_strategy is not None else ""


def run_wlln(cfg: ScenarioConfig, threads: int = 1, timing: bool = False) -> list[ExperimentRow]:
    """V(union_dev(eps)) (and any other configured deviation events) per horizon."""
    check_domination(cfg)
    rows = []
    hi, lo = cfg.theta.mean_upper(), cfg.theta.mean_lower()
    for kind in cfg.events:
        event = PathEvent.for_theta(kind, cfg.theta, cfg.epsilon, cfg.r)
        for n, (est, ms) in zip(cfg.horizons, _estimates(cfg.theta, cfg.horizons, event, cfg, threads)):
            rows.append(ExperimentRow(cfg.name, n, kind, est.method, est.value, est.mc_stderr,
                                      hi, lo, round(ms, 3) if timing else 0.0, _label(est)))
    return rows


def wlln_passed(rows: Sequence[ExperimentRow], burn_in: int = 100, z: float = 2.0) -> bool:
    """Non-increasing beyond burn-in, up to ``z`` combined standard errors."""
    by_event: dict[str, list[ExperimentRow]] = {}
    for row in rows:
        by_event.setdefault(row.event, []).append(row)
    for rs in by_event.values():
        rs = [r for r in sorted(rs, key=lambda r: r.n) if r.n >= burn_in] or sorted(rs, key=lambda r: r.n)
        for a, b in zip(rs, rs[1:]):
            if b.value > a.value + z * math.hypot(a.stderr, b.stderr):
                return False
    return True


def run_slln(cfg: ScenarioConfig, threads: int = 1) -> SllnReport:
    """Per strategy, fraction of paths whose sup over n in [n0, N] of the
    centred, n^(1/r)-scaled sum exceeds delta (or whose inf falls below -delta).

    A finite-horizon stand-in for V(limsup > 0) = 0.
    """
    check_domination(cfg)
    n_max = cfg.horizons[-1]
    starts = list(cfg.checkpoints) or [h for h in cfg.horizons if h < n_max] or [n_max]
    strategies = cfg.search_family()
    if not isinstance(strategies, list):
        strategies = strategies.strategies(cfg.theta)
    rep = SllnReport(cfg.name, n_max, starts, cfg.delta)
    for strat in strategies:
        st = path_statistics(cfg.theta, strat, [n_max], cfg.replications, cfg.seed, cfg.r,
                             starts, threads=threads)
        up = st.sup_upper > cfg.delta
        low = st.inf_lower < -cfg.delta
        rep.fractions[strat.label] = {
            "upper": up.mean(axis=0).tolist(),
            "lower": low.mean(axis=0).tolist(),
            "union": (up | low).mean(axis=0).tolist(),
        }
    return rep


def run_kolmogorov(cfg: ScenarioConfig, threads: int = 1, timing: bool = False) -> list[ExperimentRow]:
    """Lower probability of mu_lo - eps < S_n/n < mu_hi + eps, as 1 - V(complement)."""
    if cfg.r != 1.0:
        cfg = _with_r(cfg, 1.0)
    check_domination(cfg)
    hi, lo = cfg.theta.mean_upper(), cfg.theta.mean_lower()
    band = PathEvent.for_theta("band", cfg.theta, cfg.epsilon, 1.0)
    rows = []
    for n, (est, ms) in zip(cfg.horizons, _estimates(cfg.theta, cfg.horizons, band.complement(),
                                                       cfg, threads)):
        rows.append(ExperimentRow(cfg.name, n, "band", est.method, 1.0 - est.value, est.mc_stderr,
                                  hi, lo, round(ms, 3) if timing else 0.0, _label(est)))
    return rows


def kolmogorov_passed(rows: Sequence[ExperimentRow], z: float = 2.0) -> bool:
    rs = sorted(rows, key=lambda r: r.n)
    return rs[-1].value + z * math.hypot(rs[-1].stderr, rs[0].stderr) >= rs[0].value


def _with_r(cfg: ScenarioConfig, r: float) -> ScenarioConfig:
    from dataclasses import replace
    d = cfg.domination
    return replace(cfg, domination=DominationCondition(d.constant_C, d.dominating, r))


def fit_rate(ns: Sequence[float], stats: Sequence[float], r: float | None = None) -> RateFit:
    """Least-squares line through (log n, log stat)."""
    ns = np.asarray(ns, dtype=float)
    stats = np.asarray(stats, dtype=float)
    if len(ns) < 4:
        raise ValueError("rate fit needs at least 4 horizons")
    if math.log10(ns.max() / ns.min()) < 2:
        raise ValueError("horizons must span at least two decades")
    if np.any(stats <= 0):
        raise ValueError("deviation statistics must be positive to fit a rate")
    x, y = np.log(ns), np.log(stats)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    fit = RateFit(float(slope), float(intercept), r2)
    if r is not None:
        fit.target_slope = -(1.0 - 1.0 / r)
        if r == 1.0:
            fit.passed = fit.slope <= fit.target_slope + 0.15
        else:
            fit.passed = abs(fit.slope - fit.target_slope) <= 0.15
    return fit


def deviation_statistic(sums: np.ndarray, n: int, center_hi: float, center_lo: float) -> float:
    """Mean distance of S_n/n from [center_lo, center_hi] (|S_n/n - c| for a single center)."""
    dev = np.maximum(np.maximum(sums - n * center_hi, n * center_lo - sums), 0.0) / n
    return float(np.mean(dev))


def run_rate(cfg: ScenarioConfig, threads: int = 1, min_r_squared: float = 0.9):
    """Fit the decay of the deviation statistic under the worst searched strategy."""
    check_domination(cfg)
    strategies = cfg.search_family()
    if not isinstance(strategies, list):
        strategies = strategies.strategies(cfg.theta)
    hi, lo = cfg.theta.mean_upper(), cfg.theta.mean_lower()
    worst, worst_label = None, ""
    for strat in strategies:
        st = path_statistics(cfg.theta, strat, cfg.horizons, cfg.replications, cfg.seed,
                             cfg.r, threads=threads)
        stats = [deviation_statistic(st.sums[:, h], n, hi, lo) for h, n in enumerate(cfg.horizons)]
        if worst is None or stats[-1] > worst[-1]:
            worst, worst_label = stats, strat.label
    fit = fit_rate(cfg.horizons, worst, cfg.r)
    fit.passed = fit.passed and fit.r_squared >= min_r_squared
    return fit, worst, worst_label


# ---------------------------------------------------------------------------
# reports


def rows_to_csv(rows: Sequence[ExperimentRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([r.scenario, r.n, r.event, r.method, repr(float(r.value)), repr(float(r.stderr)),
                    repr(float(r.center_hi)), repr(float(r.center_lo)), repr(float(r.wall_ms))])
    return buf.getvalue()


def rows_to_json(rows: Sequence[ExperimentRow]) -> str:
    return json.dumps([asdict(r) for r in rows], indent=2) + "\n"


def slln_to_csv(rep: SllnReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "n0", "N", "strategy", "delta", "frac_upper", "frac_lower", "frac_union"])
    for label, f in rep.fractions.items():
        for g, n0 in enumerate(rep.starts):
            w.writerow([rep.scenario, n0, rep.n_max, label, repr(rep.delta), repr(f["upper"][g]),
                        repr(f["lower"][g]), repr(f["union"][g])])
    return buf.getvalue()


def rate_to_csv(fit: RateFit) -> str:
    return ("slope,intercept,r_squared,target_slope,pass\n"
            f"{fit.slope!r},{fit.intercept!r},{fit.r_squared!r},{fit.target_slope!r},"
            f"{str(fit.passed).lower()}\n")


# ---------------------------------------------------------------------------
# default corpus


def default_corpus() -> dict[str, dict]:
    """The four reference scenarios as config dictionaries."""
    pareto = {"kind": "pareto", "alpha": 1.9, "scale": 1.0}
    return {
        "a": {"name": "a", "theta": [{"kind": "discrete", "support": [[0, 0.7], [1, 0.3]]},
                                     {"kind": "discrete", "support": [[0, 0.3], [1, 0.7]]}],
              "domination": {"C": 1.0, "dominating": {"kind": "discrete", "support": [[1, 1.0]]},
                             "r": 1.0},
              "epsilon": 0.2, "horizons": [4, 8, 12]},
        "b": {"name": "b", "theta": [{"kind": "discrete", "support": [[-1, 0.5], [1, 0.5]]}],
              "domination": {"C": 1.0, "dominating": {"kind": "discrete", "support": [[1, 1.0]]},
                             "r": 1.0},
              "epsilon": 0.25, "horizons": [100, 1000, 10000]},
        "c": {"name": "c", "theta": [pareto],
              "domination": {"C": 1.0, "dominating": pareto, "r": 1.5},
              "epsilon": 0.25, "horizons": [1000, 10000, 100000]},
        "d": {"name": "d", "theta": [pareto, {"kind": "scale", "factor": 0.5, "base": pareto}],
              "domination": {"C": 1.0, "dominating": pareto, "r": 1.5},
              "epsilon": 0.25, "horizons": [1000, 10000, 100000]},
    }


def corpus_config(key: str, **overrides) -> ScenarioConfig:
    raw = dict(default_corpus()[key])
    raw.update(overrides)
    return ScenarioConfig.from_dict(raw)
