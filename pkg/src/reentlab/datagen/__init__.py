"""Deterministic rule-driven synthetic contract generation with
structural validators."""

from .interfaces import CATALOG, InterfaceSpec, address_param_name, specs_with_return
from .rules import (
    ALL_CEI_PATTERNS,
    ALL_DEP_RULES,
    CEI_OK,
    PATH_SENSITIVE_I_BEFORE_E,
    PATTERN_BY_ID,
    POST_INTERACTION_EFFECTS,
    SIMPLE_INT_BEFORE_EFFECT,
    CeiPattern,
    DepRule,
    IncompatibleRule,
    InvalidCombination,
    dep_rule,
)
from .templates import (
    LabeledSample,
    decode_axes,
    gen_dependency,
    gen_external_call,
    gen_ordering,
    gen_probe,
)
from .corpus import (
    BIT_COMBOS,
    CorpusResult,
    gen_corpus,
    gen_task_corpus,
    parse_ratio,
    read_corpus,
    stratify_cells,
    write_corpus,
)
from .validate import ValidationFailure, ValidationResult, validate

__all__ = [
    "ALL_CEI_PATTERNS", "ALL_DEP_RULES", "BIT_COMBOS", "CATALOG", "CEI_OK",
    "CeiPattern", "CorpusResult", "DepRule", "IncompatibleRule",
    "InterfaceSpec", "InvalidCombination", "LabeledSample",
    "PATH_SENSITIVE_I_BEFORE_E", "PATTERN_BY_ID", "POST_INTERACTION_EFFECTS",
    "SIMPLE_INT_BEFORE_EFFECT", "ValidationFailure", "ValidationResult",
    "address_param_name", "decode_axes", "dep_rule", "gen_corpus",
    "gen_dependency", "gen_external_call", "gen_ordering", "gen_probe",
    "gen_task_corpus", "parse_ratio", "read_corpus", "specs_with_return",
    "stratify_cells", "validate", "write_corpus",
]
