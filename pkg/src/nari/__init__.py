"""Optimal news aggregation for rationally inattentive voters and the
policy polarization it sustains in electoral competition."""

from .model import (
    AttentionSpec,
    CostKind,
    ModelError,
    ModelSpec,
    StateModel,
    Technology,
    UtilityKind,
    attention_spec,
    policy_value_diff,
    validate_model,
)
from .signals import NULL, BinarySignal, attention_cost, conditionals, gain_of_consumption, mirror
from .optimizer import (
    AssumptionViolation,
    NumericFailure,
    Regime,
    SignalSolveResult,
    Tolerances,
    assumption2_check,
    competitive_signal,
    optimal_broadcast_signal,
    optimal_personalized_signal,
    signal_profile,
    skewness_report,
)
from .equilibrium import (
    ConfigKind,
    HalfTie,
    NewsConfiguration,
    brute_force_equilibrium,
    build_canonical_configuration,
    check_consistency,
    enumerate_influential,
    equilibrium_set,
    is_influential,
    policy_latitude,
    susceptibility,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionViolation",
    "AttentionSpec",
    "BinarySignal",
    "ConfigKind",
    "CostKind",
    "HalfTie",
    "ModelError",
    "ModelSpec",
    "NULL",
    "NewsConfiguration",
    "NumericFailure",
    "Regime",
    "SignalSolveResult",
    "StateModel",
    "Technology",
    "Tolerances",
    "UtilityKind",
    "assumption2_check",
    "attention_cost",
    "attention_spec",
    "brute_force_equilibrium",
    "build_canonical_configuration",
    "check_consistency",
    "competitive_signal",
    "conditionals",
    "enumerate_influential",
    "equilibrium_set",
    "gain_of_consumption",
    "is_influential",
    "mirror",
    "optimal_broadcast_signal",
    "optimal_personalized_signal",
    "policy_latitude",
    "policy_value_diff",
    "signal_profile",
    "skewness_report",
    "susceptibility",
    "validate_model",
]
