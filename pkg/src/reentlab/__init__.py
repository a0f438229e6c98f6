"""Compositional reentrancy analysis toolkit.

Factor extraction over a closed contract grammar, a boolean decision rule
with a differentiable relaxation, a gated-fusion classifier with Jacobian
alignment, full-rankness verification, and rule-driven synthetic corpus
generation.
"""

__version__ = "0.1.0"

from .factors import (
    DepKind,
    FactorSet,
    ProgramUnit,
    analyze_source,
    compute_factors,
    dependency_matrix,
    empty_factor_set,
    external_call_units,
    ordering_matrix,
    state_update_units,
)
from .oracle import TooLarge, brute_force_oracle
from .scoring import ScoreParams, SoftScore, Verdict, boolean_rule, predict, soft_order, soft_score
from .metrics import MetricsReport, compute_metrics

__all__ = [
    "DepKind", "FactorSet", "MetricsReport", "ProgramUnit", "ScoreParams",
    "SoftScore", "TooLarge", "Verdict", "analyze_source", "boolean_rule",
    "brute_force_oracle", "compute_factors", "compute_metrics",
    "dependency_matrix", "empty_factor_set", "external_call_units",
    "ordering_matrix", "predict", "soft_order", "soft_score",
    "state_update_units", "__version__",
]
