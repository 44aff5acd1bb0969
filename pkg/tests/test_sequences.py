import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sublln.ambiguity import AmbiguitySet
from sublln.capacity import StrategySearchConfig
from sublln.distributions import (Clamp, PowerClamped, Shifted, SmoothedIndicator,
                                  SymmetricPareto, bernoulli, point_mass, two_point)
from sublln.sequences import (Constant, LastSign, PathModel, Randomized, RoundRobin, Table,
                              Threshold, UnsupportedAuditError, histories,
                              joint_upper_expectation, nested_upper_expectation, normaliser,
                              path_statistics, pseudo_independence_audit, simulate,
                              simulate_python, strategy_from_config)

MIXED = AmbiguitySet((Shifted(SymmetricPareto(1.9, 1.0), 0.4), two_point(-1.0, 2.0),
                      Shifted(SymmetricPareto(2.5, 0.5), -0.3)))

COMPILED = [Constant(0), Constant(2), RoundRobin(), Threshold(2, 1, 0.1), Threshold(0, 2, -0.2),
            LastSign(1, 0), LastSign(2, 1), Randomized((0, 2, 2, 1, 0))]


def test_strategy_choose_rules():
    assert Constant(1).choose((1.0, 2.0), 3) == 1
    assert [RoundRobin().choose((0.0,) * j, 3) for j in range(5)] == [0, 1, 2, 0, 1]
    th = Threshold(0, 1, 0.5)
    assert th.choose((), 2) == 0          # S_0 = 0 is not < 0
    assert th.choose((0.0,), 2) == 1      # 0 < 0.5
    assert th.choose((1.0,), 2) == 0
    assert LastSign(0, 1).choose((), 2) == 1
    assert LastSign(0, 1).choose((2.0, -1.0), 2) == 0
    assert Randomized((1, 0, 0)).choose((0.0,) * 3, 2) == 1
    tab = Table(1, {(): 0, (0.0,): 1}, default=None)
    assert tab.choose((5.0, 0.0), 2) == 1
    with pytest.raises(KeyError):
        tab.choose((1.0,), 2)
    assert not tab.is_total([0.0, 1.0])
    assert Table(1, {(): 0, (0.0,): 1, (1.0,): 0}).is_total([0.0, 1.0])


@pytest.mark.parametrize("bad", [Constant(3), Threshold(0, 5), LastSign(-1, 0), Randomized((0, 4))])
def test_strategy_validation(bad):
    with pytest.raises(ValueError):
        PathModel(MIXED, bad, 10)


def test_model_validation():
    with pytest.raises(ValueError):
        PathModel(MIXED, Constant(0), 0)
    with pytest.raises(ValueError):
        PathModel(MIXED, Constant(0), 5, truncation_r=2.0)


def test_strategy_from_config():
    assert strategy_from_config({"kind": "threshold", "lo": 1, "hi": 0, "level": 0.5}) == Threshold(1, 0, 0.5)
    assert strategy_from_config({"kind": "genome", "genome": [1, 0]}) == Randomized((1, 0))
    tab = strategy_from_config({"kind": "table", "depth": 1, "entries": [[[], 1], [[0], 0]], "default": 0})
    assert tab.choose((0.0,), 2) == 0 and tab.choose((), 2) == 1
    with pytest.raises(ValueError):
        strategy_from_config({"kind": "oracle"})


@pytest.mark.parametrize("strategy", COMPILED)
def test_compiled_simulation_matches_python_loop(strategy):
    model = PathModel(MIXED, strategy, 2000)
    a, b = simulate(model, 11, 5), simulate_python(model, 11, 5)
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.chosen_indices, b.chosen_indices)
    assert np.array_equal(a.partial_sums, b.partial_sums)


@pytest.mark.parametrize("strategy", COMPILED)
def test_chosen_index_follows_rule(strategy):
    path = simulate(PathModel(MIXED, strategy, 300), 3, 0)
    for j in range(300):
        assert path.chosen_indices[j] == strategy.choose(tuple(path.values[:j]), 3)


def test_table_strategy_simulates_through_python():
    theta = AmbiguitySet((point_mass(0.0), point_mass(1.0)))
    tab = Table(1, {}, default=1)
    path = simulate(PathModel(theta, tab, 5), 0, 0)
    assert list(path.values) == [1.0] * 5


@given(st.integers(0, 2 ** 63), st.integers(0, 1000), st.floats(-1.0, 1.5))
@settings(max_examples=30, deadline=None)
def test_partial_sums_are_compensated(seed, rep, level):
    path = simulate(PathModel(MIXED, Threshold(0, 2, level), 500), seed, rep)
    exact = np.array([math.fsum(path.values[:j + 1]) for j in range(500)])
    assert np.max(np.abs(path.partial_sums - exact)) <= 1e-9 * max(1.0, np.max(np.abs(exact)))


# -- batch statistics ----------------------------------------------------------

def _direct_statistics(theta, strategy, horizons, reps, seed, r, starts):
    n_max = max(horizons)
    norm = normaliser(n_max, r)
    c_hi, c_lo = theta.mean_upper(), theta.mean_lower()
    out = []
    for i in range(reps):
        p = simulate(PathModel(theta, strategy, n_max), seed, i)
        j = np.arange(1, n_max + 1)
        up = (p.partial_sums - j * c_hi) / norm[1:]
        lo = (p.partial_sums - j * c_lo) / norm[1:]
        out.append(([p.partial_sums[h - 1] for h in horizons],
                    [up[s - 1:].max() for s in starts], [lo[s - 1:].min() for s in starts],
                    int(np.sum(np.abs(p.values) >= norm[1:]))))
    return out


@pytest.mark.parametrize("r", [1.0, 1.5])
def test_path_statistics_against_single_paths(r):
    strat = Threshold(2, 0, 0.0)
    horizons, starts = [10, 100, 1000], [1, 50, 700]
    stats = path_statistics(MIXED, strat, horizons, 20, 42, r=r, starts=starts)
    for i, (s, up, lo, cl) in enumerate(_direct_statistics(MIXED, strat, horizons, 20, 42, r, starts)):
        assert np.allclose(stats.sums[i], s, rtol=0, atol=1e-12)
        assert np.allclose(stats.sup_upper[i], up, rtol=0, atol=1e-12)
        assert np.allclose(stats.inf_lower[i], lo, rtol=0, atol=1e-12)
        assert stats.clamped[i] == cl


def test_path_statistics_thread_invariant():
    a = path_statistics(MIXED, LastSign(0, 2), [100, 5000], 97, 7, r=1.5, starts=[10, 100], threads=1)
    b = path_statistics(MIXED, LastSign(0, 2), [100, 5000], 97, 7, r=1.5, starts=[10, 100], threads=4)
    for f in ("sums", "sup_upper", "inf_lower", "clamped"):
        assert np.array_equal(getattr(a, f), getattr(b, f))
    c = path_statistics(MIXED, LastSign(0, 2), [100, 5000], 47, 7, r=1.5, starts=[10, 100], rep_start=50)
    assert np.array_equal(a.sums[50:], c.sums)


def test_path_statistics_rejects_table():
    with pytest.raises(ValueError):
        path_statistics(MIXED, Table(0, {}, default=0), [5], 10, 0)


# -- audit ---------------------------------------------------------------------

def test_histories_enumeration():
    hs = list(histories([0.0, 1.0], 4))
    assert len(hs) == 1 + 2 + 4 + 8
    assert hs[0] == () and hs[-1] == (1.0, 1.0, 1.0)


CATALOG = [Clamp(0.0, 1.0), SmoothedIndicator(0.5, 0.1), PowerClamped(2.0, 1.0)]


def test_audit_passes_for_every_family_strategy(bern_pair):
    for strat in StrategySearchConfig().strategies(bern_pair):
        v = pseudo_independence_audit(PathModel(bern_pair, strat, 8), CATALOG, 8)
        assert v <= 1e-12


def test_audit_detects_injected_law():
    theta = AmbiguitySet((point_mass(0.0), point_mass(1.0)))
    model = PathModel(theta, RoundRobin(), 4)
    v = pseudo_independence_audit(model, [Clamp(-5.0, 5.0)], 4,
                                  kernel=lambda h: point_mass(2.0) if len(h) == 2 else theta[0])
    assert v == pytest.approx(1.0, abs=1e-15)


def test_audit_refuses_continuous_members():
    with pytest.raises(UnsupportedAuditError):
        pseudo_independence_audit(PathModel(MIXED, Constant(0), 3), CATALOG, 3)
    with pytest.raises(ValueError):
        theta = AmbiguitySet((bernoulli(0.5),))
        pseudo_independence_audit(PathModel(theta, Constant(0), 13), CATALOG, 13)


def _all_tables(theta, depth=2):
    support = [float(v) for v in theta.support()]
    keys = [h for h in histories(support, depth)]
    for choice in itertools.product(range(len(theta)), repeat=len(keys)):
        yield Table(depth, dict(zip(keys, choice)))


def test_joint_never_exceeds_nested(signs):
    phi = lambda x1, x2: x1 * x2
    family = StrategySearchConfig().strategies(signs)
    assert joint_upper_expectation(signs, family, phi) <= nested_upper_expectation(signs, family, phi) + 1e-15
    # over every adaptive rule the two coincide
    tables = list(_all_tables(signs))
    assert joint_upper_expectation(signs, tables, phi) == nested_upper_expectation(signs, tables, phi) == 1.0


def test_joint_brute_force(bern_pair):
    phi = lambda x1, x2: float(x1 != x2)
    # oracle: enumerate the four (k1, k2 | x1) choices by hand
    p = [0.3, 0.7]
    best = 0.0
    for k1, k2a, k2b in itertools.product(range(2), repeat=3):
        q1 = p[k1]
        best = max(best, (1 - q1) * p[k2a] + q1 * (1 - p[k2b]))
    assert joint_upper_expectation(bern_pair, list(_all_tables(bern_pair)), phi) == pytest.approx(best, abs=1e-15)


def test_threshold_strategy_breaks_nested_independence(bern_pair):
    # audit-clean, yet the joint law of (X_1, X_2) is not the nested one
    strat = Threshold(0, 1, 0.5)
    assert pseudo_independence_audit(PathModel(bern_pair, strat, 6), CATALOG, 6) <= 1e-12
    phi = lambda x1, x2: x2
    joint = joint_upper_expectation(bern_pair, [strat], phi)
    nested = nested_upper_expectation(bern_pair, [strat], phi)
    assert joint == pytest.approx(0.7 * 0.7 + 0.3 * 0.3, abs=1e-15)
    assert nested == pytest.approx(0.7, abs=1e-15)
    # a history-free rule has no such gap
    rr = RoundRobin()
    assert joint_upper_expectation(bern_pair, [rr], phi) == pytest.approx(0.7, abs=1e-15)
