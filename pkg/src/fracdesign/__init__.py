"""Two-level fractional factorial designs: construction, evaluation,
minimum aberration search and an LLM design benchmark."""

from .design import (
    Compliance,
    ComplianceReport,
    DesignError,
    DesignTable,
    MomentPattern,
    Order,
    WordLengthPattern,
    coincidence,
    compare_patterns,
    generalized_wlp,
    generalized_word_count,
    moment_pattern,
    resolution,
    validate_table,
)
from .regular import (
    DefiningRelation,
    FactorWord,
    GeneratorSpec,
    build_design,
    defining_relation,
    parse_generators,
    parse_word,
    resolution_from_wlp,
    wlp_from_relation,
)

__version__ = "0.1.0"

__all__ = [
    "Compliance", "ComplianceReport", "DefiningRelation", "DesignError", "DesignTable",
    "FactorWord", "GeneratorSpec", "MomentPattern", "Order", "WordLengthPattern",
    "build_design", "coincidence", "compare_patterns", "defining_relation", "generalized_wlp",
    "generalized_word_count", "moment_pattern", "parse_generators", "parse_word", "resolution",
    "resolution_from_wlp", "validate_table", "wlp_from_relation",
]
