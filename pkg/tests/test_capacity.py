import math

import numpy as np
import pytest

from oracles import (brute_force_extremes, path_probability, random_binary_instance,
                     random_discrete_instance)
from sublln.ambiguity import AmbiguitySet
from sublln.capacity import (BudgetError, CapacityEstimate, ModelMismatchError, PathEvent,
                             StrategySearchConfig, conjugate_lower, exact_lower_prob,
                             exact_upper_prob, search_upper_prob, search_upper_probs)
from sublln.distributions import SymmetricPareto, bernoulli, two_point
from sublln.sequences import Constant, RoundRobin


def test_event_semantics():
    ev = PathEvent("union_dev", 0.25, 1.0, center_hi=0.7, center_lo=0.3)
    assert ev.occurs(4.0, 4) and ev.occurs(0.0, 4) and not ev.occurs(2.0, 4)
    assert not PathEvent("upper_dev", 0.5, 1.0, center_hi=0.7).occurs(4.0, 4)
    assert PathEvent("upper_dev", 0.25, 1.0, center_hi=0.7).occurs(4.0, 4)
    assert PathEvent("lower_dev", 0.25, 1.0, center_lo=0.3).occurs(0.0, 4)
    band = PathEvent("band", 0.1, mu_lo=0.3, mu_hi=0.7)
    assert band.occurs(2.0, 4) and not band.occurs(4.0, 4)
    assert band.complement().occurs(4.0, 4)
    assert PathEvent("upper_dev", 0.25, 1.5, center_hi=0.0).occurs(2.0, 8)   # 2/4 >= 0.25
    with pytest.raises(ValueError):
        PathEvent("wild", 0.1)
    with pytest.raises(ValueError):
        PathEvent("band", 0.0)


def test_exact_values_by_hand(bern_pair):
    # n = 1: V(X_1 >= 1) picks the p = 0.7 member
    ev = PathEvent("custom_threshold", threshold=1.0)
    assert exact_upper_prob(bern_pair, 1, ev).value == pytest.approx(0.7, abs=1e-15)
    assert exact_lower_prob(bern_pair, 1, ev).value == pytest.approx(0.3, abs=1e-15)
    # n = 2, S_2 >= 1: the adversary uses 0.7 twice, 1 - 0.09
    assert exact_upper_prob(bern_pair, 2, ev).value == pytest.approx(0.91, abs=1e-15)


def test_scenario_a_exact_values():
    theta = AmbiguitySet((bernoulli(0.3), bernoulli(0.7)))
    ev = PathEvent.for_theta("union_dev", theta, 0.2)
    vals = [exact_upper_prob(theta, n, ev, with_strategy=False).value for n in (4, 8, 12)]
    assert vals == pytest.approx([0.3430, 0.08235, 0.11662], abs=5e-5)


@pytest.mark.parametrize("seed", range(40))
def test_exact_matches_brute_force(seed):
    theta, n, ev = random_binary_instance(np.random.default_rng(seed))
    hi, lo = brute_force_extremes(theta, ev, n)
    assert exact_upper_prob(theta, n, ev).value == pytest.approx(hi, abs=1e-15)
    assert exact_lower_prob(theta, n, ev).value == pytest.approx(lo, abs=1e-15)


@pytest.mark.parametrize("seed", range(20))
def test_optimal_table_attains_value(seed):
    theta, n, ev = random_binary_instance(np.random.default_rng(1000 + seed))
    est = exact_upper_prob(theta, n, ev)
    assert est.best_strategy.is_total(theta.support(), n)
    rule = dict(est.best_strategy.entries)
    assert float(path_probability(theta, rule, ev, n)) == pytest.approx(est.value, abs=1e-15)


@pytest.mark.parametrize("seed", range(50))
def test_conjugacy_exact(seed):
    theta, n, ev = random_discrete_instance(np.random.default_rng(seed))
    up = exact_upper_prob(theta, n, ev, with_strategy=False)
    low_c = exact_lower_prob(theta, n, ev.complement(), with_strategy=False)
    assert abs(up.value + low_c.value - 1.0) <= 4 * np.finfo(float).eps


def test_conjugate_lower_and_model_mismatch(bern_pair):
    ev = PathEvent.for_theta("union_dev", bern_pair, 0.2)
    a = exact_upper_prob(bern_pair, 4, ev)
    ac = exact_upper_prob(bern_pair, 4, ev.complement())
    assert conjugate_lower(a, ac) == pytest.approx(exact_lower_prob(bern_pair, 4, ev).value, abs=1e-14)
    other = exact_upper_prob(bern_pair, 5, ev.complement())
    with pytest.raises(ModelMismatchError):
        conjugate_lower(a, other)


def test_budget_and_discreteness_guards(bern_pair):
    ev = PathEvent.for_theta("union_dev", bern_pair, 0.2)
    with pytest.raises(BudgetError):
        exact_upper_prob(bern_pair, 30, ev, max_nodes=1000)
    with pytest.raises(ValueError):
        exact_upper_prob(AmbiguitySet((SymmetricPareto(1.9, 1.0),)), 2, ev)


def test_estimate_validation():
    with pytest.raises(ValueError):
        CapacityEstimate(0.5, "guess", None)
    with pytest.raises(ValueError):
        CapacityEstimate(0.5, "exact_dp", None, mc_stderr=0.1)
    assert CapacityEstimate(1.0 + 1e-17, "exact_dp", None).value == 1.0


# -- search ----------------------------------------------------------------------

def test_family_contents(bern_pair):
    fam = StrategySearchConfig().strategies(bern_pair)
    labels = [s.label for s in fam]
    assert len(labels) == len(set(labels))
    assert "constant(0)" in labels and "round_robin" in labels
    assert StrategySearchConfig().strategies(AmbiguitySet((bernoulli(0.5),))) == [Constant(0)]
    cfg = StrategySearchConfig.from_config({"threshold_levels": [0.5], "random_genomes": 0,
                                            "last_sign": False})
    assert sum(s.label.startswith("threshold") for s in cfg.strategies(bern_pair)) == 2


def test_search_is_lower_bound_of_exact(bern_pair):
    for n in (4, 8, 12):
        ev = PathEvent.for_theta("union_dev", bern_pair, 0.2)
        exact = exact_upper_prob(bern_pair, n, ev, with_strategy=False).value
        est = search_upper_prob(bern_pair, n, ev, replications=20_000, seed=1)
        assert est.method == "strategy_search"
        assert est.value <= exact + 4 * max(est.mc_stderr, 1e-3)


def test_search_constant_matches_exact_for_singleton():
    theta = AmbiguitySet((two_point(-1.0, 1.0),))
    ev = PathEvent.for_theta("union_dev", theta, 0.25)
    exact = exact_upper_prob(theta, 10, ev, with_strategy=False).value
    est = search_upper_prob(theta, 10, ev, replications=40_000, seed=3)
    assert abs(est.value - exact) <= 4 * est.mc_stderr


def test_search_reproducible_and_thread_invariant(bern_pair):
    ev = PathEvent.for_theta("union_dev", bern_pair, 0.2)
    a = search_upper_probs(bern_pair, [10, 100], ev, replications=500, seed=9)
    b = search_upper_probs(bern_pair, [100, 10], ev, replications=500, seed=9, threads=3)
    assert [e.value for e in a] == [e.value for e in b]
    assert [e.per_strategy for e in a] == [e.per_strategy for e in b]
    with pytest.raises(ValueError):
        search_upper_probs(bern_pair, [10], ev, replications=10)


def test_search_with_explicit_family(bern_pair):
    ev = PathEvent("custom_threshold", threshold=3.0)
    est = search_upper_prob(bern_pair, 4, ev, [Constant(0), RoundRobin()], replications=1000)
    assert est.strategies_searched == 2 and set(est.per_strategy) == {"constant(0)", "round_robin"}
    assert math.isclose(est.mc_stderr, math.sqrt(est.value * (1 - est.value) / 1000))
