"""Marginal productivity indices for restless bandits.

Exact indexability testing by wage sweep, adaptive-greedy index
computation over pluggable nested-set systems, verification diagnostics,
closed-form queueing indices, and reformulations that recover classic,
switching-cost, and finite-horizon bandits as special cases.
"""
from .bandit import (ControllabilityPartition, MarginalMeasures, ModelError,
                     PolicyValue, RestlessBandit, SizeGuardError,
                     check_active_set, evaluate_policy, marginal_measures,
                     partition_states, resolve_max_states)
from .instanceio import (InstanceFile, load_instance, save_instance,
                         to_classic, to_restless)
from .oracle import (IndexabilityVerdict, WageIntervalWitness, WageSolution,
                     WorkRewardRegion, optimal_value_check, region,
                     solve_wage, subset_tables, test_indexability)
from .queueing import (Mm1Params, admission_index, bias_mpi,
                       loss_sensitivity_class, mts_index_general,
                       mts_index_linear, mts_index_myopic, second_order_mpi)
from .reform import (AugmentedState, ClassicBandit, embed_classic,
                     embed_finite_horizon, embed_switching, family_horizon,
                     family_switching, gittins_indices, pack_state,
                     unpack_state)
from .setsystems import (LpVerdict, MpiResult, PclVerdict,
                         RepresentationReport, SetSystem,
                         ZeroMarginalWorkError, adaptive_greedy,
                         check_lp, check_monotone_connected, check_pcl,
                         family_full, family_nested, representation_checks)

__version__ = "0.1.0"

__all__ = [
    "AugmentedState", "ClassicBandit", "ControllabilityPartition",
    "IndexabilityVerdict", "InstanceFile", "LpVerdict", "MarginalMeasures",
    "Mm1Params", "ModelError", "MpiResult", "PclVerdict", "PolicyValue",
    "RepresentationReport", "RestlessBandit", "SetSystem", "SizeGuardError",
    "WageIntervalWitness", "WageSolution", "WorkRewardRegion",
    "ZeroMarginalWorkError", "adaptive_greedy", "admission_index",
    "bias_mpi", "check_active_set", "check_lp", "check_monotone_connected",
    "check_pcl", "embed_classic", "embed_finite_horizon", "embed_switching",
    "evaluate_policy", "family_full", "family_horizon", "family_nested",
    "family_switching", "gittins_indices", "load_instance",
    "loss_sensitivity_class", "marginal_measures", "mts_index_general",
    "mts_index_linear", "mts_index_myopic", "optimal_value_check",
    "pack_state", "partition_states", "region", "resolve_max_states",
    "save_instance", "second_order_mpi", "solve_wage", "subset_tables",
    "test_indexability", "to_classic", "to_restless", "unpack_state",
]
