"""Sublinear expectations over finite ambiguity sets and Marcinkiewicz-type
laws of large numbers for pseudo-independent sequences."""

from .ambiguity import (AmbiguitySet, CapacityPair, DominationCondition, Transform, abs_power,
                        capacity_agreement, choquet_upper, lower_expectation, marginal_capacity,
                        upper_expectation, verify_domination)
from .capacity import (CapacityEstimate, PathEvent, StrategySearchConfig, conjugate_lower,
                       exact_lower_prob, exact_upper_prob, search_upper_prob)
from .distributions import (AffineClamped, Clamp, Discrete, Distribution, PowerClamped, Scaled,
                            Shifted, SmoothedIndicator, SymmetricPareto, TestFunction, bernoulli,
                            point_mass, two_point)
from .sequences import (Constant, LastSign, PathModel, Randomized, RoundRobin, SamplePath,
                        Strategy, Table, Threshold, pseudo_independence_audit, simulate)
from .truncation import (TruncationScheme, borel_cantelli_budget, decomposition_terms,
                         kronecker_check, step1_series, step2_series, truncate)

__version__ = "0.1.0"
