"""Command line entry point: ``sublln <command> --config scenario.json``.

Exit status: 0 when the command's check passes, 1 when it fails, 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import harness
from .ambiguity import choquet_upper
from .capacity import (PathEvent, exact_upper_prob, search_upper_prob)
from .config import SEED_MASK, ConfigError, ScenarioConfig, load_config
from .distributions import NonIntegrableError
from .sequences import PathModel, pseudo_independence_audit
from .distributions import Clamp, PowerClamped, SmoothedIndicator
from .truncation import (TruncationScheme, borel_cantelli_budget, kronecker_check,
                         step1_series, step2_series)

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= SEED_MASK:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario JSON file")
    common.add_argument("--seed", type=_u64, help="override the scenario seed")
    common.add_argument("--reps", type=int, help="override the replication count")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--timing", action="store_true",
                        help="record wall_ms (otherwise 0 so reports are byte-reproducible)")

    p = argparse.ArgumentParser(prog="sublln", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("choquet", parents=[common], help="upper Choquet integral of theta")
    s = sub.add_parser("series", parents=[common], help="truncation series and their bounds")
    s.add_argument("which", choices=("step1", "step2", "borel-cantelli", "kronecker"))
    c = sub.add_parser("capacity", parents=[common], help="upper probability of a path event")
    c.add_argument("method", choices=("exact", "search"))
    for name, text in (("wlln", "weak law: V(union_dev) per horizon"),
                       ("slln", "strong law: exceedance fractions"),
                       ("kolmogorov", "lower probability of the mean band"),
                       ("rate", "log-log rate fit"),
                       ("audit", "pseudo-independence audit")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _check_expected(cfg: ScenarioConfig, value: float) -> int:
    if cfg.expected is None:
        return EXIT_PASS
    return EXIT_PASS if abs(value - cfg.expected) <= cfg.tolerance else EXIT_FAIL


def _scalar_report(fmt: str, **fields) -> str:
    if fmt == "json":
        return json.dumps(fields) + "\n"
    return ",".join(fields) + "\n" + ",".join(repr(v) if isinstance(v, float) else str(v)
                                              for v in fields.values()) + "\n"


def cmd_choquet(cfg, args):
    tr = cfg.choquet_transform()
    value = choquet_upper(cfg.theta, tr)
    _emit(_scalar_report(args.format, scenario=cfg.name, transform=tr.kind, r=tr.r,
                         value=value), args.out)
    return _check_expected(cfg, value)


def cmd_series(cfg, args):
    scheme = TruncationScheme(cfg.r)
    if args.which == "kronecker":
        return _kronecker(cfg, args)
    fn = {"step1": step1_series, "step2": step2_series,
          "borel-cantelli": borel_cantelli_budget}[args.which]
    rep = fn(cfg.theta, scheme, cfg.series_n, cfg.domination)
    if args.format == "json":
        text = json.dumps([dict(zip(("N", "partial_sum", "bound", "remainder"), row))
                           for row in rep.rows()]) + "\n"
    else:
        text = rep.to_csv()
    _emit(text, args.out)
    if not math.isfinite(rep.closed_form_bound):
        if args.which == "step1" and cfg.r == 1.0:
            return EXIT_PASS if rep.extras["cesaro"][-1] <= rep.extras["cesaro"][0] else EXIT_FAIL
        return EXIT_FAIL
    return EXIT_PASS if rep.total < rep.closed_form_bound else EXIT_FAIL


def _kronecker(cfg, args):
    k = cfg.kronecker
    n = int(k.get("N", 100_000))
    idx = np.arange(1, n + 1, dtype=float)
    xs = k.get("x", "inverse_square")
    x = {"inverse_square": 1.0 / idx ** 2, "alternating": (-1.0) ** idx,
         "zero": np.zeros(n)}.get(xs) if isinstance(xs, str) else np.asarray(xs, dtype=float)
    if x is None:
        raise ConfigError(f"unknown kronecker sequence {xs!r}")
    b = idx if k.get("b", "linear") == "linear" else np.asarray(k["b"], dtype=float)
    rep = kronecker_check(x, b, float(k.get("tol", 1e-3)))
    rows = [(m, rep.series[m - 1], rep.averages[m - 1]) for m in sorted({1, 10, 100, 1000, 10000, n}) if m <= n]
    if args.format == "json":
        text = json.dumps([{"N": m, "series": s, "average": a} for m, s, a in rows]) + "\n"
    else:
        text = "N,series,average\n" + "".join(f"{m},{s!r},{a!r}\n" for m, s, a in rows)
    _emit(text, args.out)
    return EXIT_PASS if rep.consistent else EXIT_FAIL


def _event(cfg):
    spec = cfg.event or {"kind": cfg.events[0]}
    return PathEvent.from_config(spec, cfg.theta, cfg.r, cfg.epsilon), spec.get("n", cfg.horizons[0])


def cmd_capacity(cfg, args):
    event, n = _event(cfg)
    if args.method == "exact":
        est = exact_upper_prob(cfg.theta, int(n), event, with_strategy=False)
    else:
        est = search_upper_prob(cfg.theta, int(n), event, cfg.search_family(), cfg.replications,
                                cfg.seed, args.threads)
    row = harness.ExperimentRow(cfg.name, int(n), event.kind + ("^c" if event.negated else ""),
                                est.method, est.value, est.mc_stderr, cfg.theta.mean_upper(),
                                cfg.theta.mean_lower())
    _emit(harness.rows_to_json([row]) if args.format == "json" else harness.rows_to_csv([row]), args.out)
    return _check_expected(cfg, est.value)


def cmd_wlln(cfg, args):
    rows = harness.run_wlln(cfg, args.threads, args.timing)
    _emit(harness.rows_to_json(rows) if args.format == "json" else harness.rows_to_csv(rows), args.out)
    return EXIT_PASS if harness.wlln_passed(rows, cfg.burn_in) else EXIT_FAIL


def cmd_kolmogorov(cfg, args):
    rows = harness.run_kolmogorov(cfg, args.threads, args.timing)
    _emit(harness.rows_to_json(rows) if args.format == "json" else harness.rows_to_csv(rows), args.out)
    return EXIT_PASS if harness.kolmogorov_passed(rows) else EXIT_FAIL


def cmd_slln(cfg, args):
    rep = harness.run_slln(cfg, args.threads)
    if args.format == "json":
        text = json.dumps({"scenario": rep.scenario, "N": rep.n_max, "starts": rep.starts,
                           "delta": rep.delta, "fractions": rep.fractions}) + "\n"
    else:
        text = harness.slln_to_csv(rep)
    _emit(text, args.out)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_rate(cfg, args):
    fit, _, _ = harness.run_rate(cfg, args.threads)
    if args.format == "json":
        text = json.dumps({"slope": fit.slope, "intercept": fit.intercept,
                           "r_squared": fit.r_squared, "target_slope": fit.target_slope,
                           "pass": fit.passed}) + "\n"
    else:
        text = harness.rate_to_csv(fit)
    _emit(text, args.out)
    return EXIT_PASS if fit.passed else EXIT_FAIL


def audit_catalog(theta):
    """Bounded Lipschitz probes that act as x, a smoothed step and x^2 on a
    window one support-width beyond the support, so laws that leave the
    support are visible too."""
    support = theta.support()
    lo, hi = float(support.min()), float(support.max())
    width = max(hi - lo, 1.0)
    mid = 0.5 * (lo + hi)
    reach = max(abs(lo), abs(hi)) + width
    return [Clamp(lo - width, hi + width), SmoothedIndicator(mid, max((hi - lo) / 10, 1e-3)),
            PowerClamped(2.0, reach * reach)]


def cmd_audit(cfg, args):
    harness.check_domination(cfg)
    family = cfg.search_family()
    strategies = family if isinstance(family, list) else family.strategies(cfg.theta)
    phis = audit_catalog(cfg.theta)
    results = []
    for strat in strategies:
        v = pseudo_independence_audit(PathModel(cfg.theta, strat, cfg.audit_depth, cfg.r), phis,
                                      cfg.audit_depth)
        results.append((strat.label, v))
    worst = max(v for _, v in results)
    if args.format == "json":
        text = json.dumps([{"strategy": s, "max_violation": v} for s, v in results]) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strategy", "max_violation"])
        w.writerows([s, repr(v)] for s, v in results)
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_PASS if worst <= 1e-12 else EXIT_FAIL


COMMANDS = {"choquet": cmd_choquet, "series": cmd_series, "capacity": cmd_capacity,
            "wlln": cmd_wlln, "slln": cmd_slln, "kolmogorov": cmd_kolmogorov,
            "rate": cmd_rate, "audit": cmd_audit}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.reps is not None:
            overrides["replications"] = args.reps
        if overrides:
            from dataclasses import replace
            cfg = replace(cfg, **overrides)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except harness.DominationViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonIntegrableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
