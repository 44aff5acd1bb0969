"""Scenario configuration: one JSON document per scenario."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .ambiguity import AmbiguitySet, DominationCondition, Transform, abs_power
from .capacity import EVENT_KINDS, StrategySearchConfig
from .distributions import DistributionError
from .sequences import Strategy, strategy_from_config

SEED_MASK = (1 << 64) - 1


class ConfigError(ValueError):
    """Malformed scenario; ``line`` points into the source document when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = source or "<config>"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}")


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


@dataclass
class ScenarioConfig:
    name: str
    theta: AmbiguitySet
    domination: DominationCondition
    epsilon: float = 0.25
    delta: float = 0.1
    horizons: tuple[int, ...] = (100, 1000, 10_000)
    checkpoints: tuple[int, ...] = ()
    replications: int = 10_000
    seed: int = 0
    strategies: tuple[Strategy, ...] = ()
    family: StrategySearchConfig = field(default_factory=StrategySearchConfig)
    events: tuple[str, ...] = ("union_dev",)
    event: dict | None = None
    output: str | None = None
    series_n: int = 10_000
    audit_depth: int = 8
    burn_in: int = 100
    transform: Transform | None = None
    expected: float | None = None
    tolerance: float = 1e-6
    kronecker: dict = field(default_factory=dict)

    @property
    def r(self) -> float:
        return self.domination.order_r

    def search_family(self):
        return list(self.strategies) if self.strategies else self.family

    def choquet_transform(self) -> Transform:
        return self.transform or abs_power(self.r)

    @classmethod
    def from_dict(cls, raw: dict, text: str = "", source: str | None = None) -> "ScenarioConfig":
        def fail(msg, key=None):
            raise ConfigError(msg, _line_of(text, key) if key else None, source)

        if not isinstance(raw, dict):
            fail("scenario must be a JSON object")
        for key in ("theta", "domination"):
            if key not in raw:
                fail(f"missing required key {key!r}")

        def parse(key, fn, default=None):
            if key not in raw:
                return default
            try:
                return fn(raw[key])
            except ConfigError:
                raise
            except (KeyError, TypeError, ValueError, DistributionError) as exc:
                fail(f"bad {key!r}: {exc}", key)

        theta = parse("theta", AmbiguitySet.from_config)
        dom = parse("domination", DominationCondition.from_config)
        eps = parse("epsilon", float, 0.25)
        if not eps > 0:
            fail("epsilon must be positive", "epsilon")
        horizons = parse("horizons", lambda v: tuple(int(x) for x in v), cls.horizons)
        if not horizons or any(h < 1 for h in horizons) or any(b <= a for a, b in zip(horizons, horizons[1:])):
            fail("horizons must be positive and strictly increasing", "horizons")
        checkpoints = parse("checkpoints", lambda v: tuple(int(x) for x in v), ())
        if any(b <= a for a, b in zip(checkpoints, checkpoints[1:])):
            fail("checkpoints must be strictly increasing", "checkpoints")
        reps = parse("replications", int, 10_000)
        if reps < 1:
            fail("replications must be positive", "replications")
        seed = parse("seed", int, 0)
        if not 0 <= seed <= SEED_MASK:
            fail("seed must be an unsigned 64-bit integer", "seed")
        strategies: tuple = ()
        if "strategy" in raw:
            strategies = (parse("strategy", strategy_from_config),)
        if "strategies" in raw:
            strategies = parse("strategies", lambda v: tuple(strategy_from_config(s) for s in v))
        for s in strategies:
            try:
                s.validate(len(theta))
            except ValueError as exc:
                fail(str(exc), "strategy" if "strategy" in raw else "strategies")
        family = parse("family", StrategySearchConfig.from_config, StrategySearchConfig())
        events = parse("events", lambda v: tuple(str(x) for x in v), ("union_dev",))
        for ev in events:
            if ev not in EVENT_KINDS:
                fail(f"unknown event kind {ev!r}", "events")
        event = parse("event", dict)
        if event is not None and event.get("kind", "union_dev") not in EVENT_KINDS:
            fail(f"unknown event kind {event.get('kind')!r}", "event")
        transform = parse("transform", lambda v: Transform(v.get("kind", "identity"), float(v.get("r", 1.0))))
        return cls(
            name=str(raw.get("name", Path(source).stem if source else "scenario")),
            theta=theta, domination=dom, epsilon=eps,
            delta=parse("delta", float, 0.1), horizons=horizons, checkpoints=checkpoints,
            replications=reps, seed=seed, strategies=strategies, family=family,
            events=events, event=event, output=raw.get("output"),
            series_n=parse("series_N", int, 10_000), audit_depth=parse("audit_depth", int, 8),
            burn_in=parse("burn_in", int, 100), transform=transform,
            expected=parse("expected", float), tolerance=parse("tolerance", float, 1e-6),
            kronecker=parse("kronecker", dict, {}),
        )


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", None, str(path)) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, str(path)) from exc
    return ScenarioConfig.from_dict(raw, text, str(path))
