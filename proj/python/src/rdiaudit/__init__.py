"""Python bindings for the rdiaudit core."""

from ._rdiaudit import (
    RdiauditError,
    average_catalogue_rdi,
    build_query,
    classify_pattern,
    compute_rdi,
    display,
    distribution_summary,
    heuristic_verdict,
    ledger_summary,
    median_lag,
    mention_id,
    normalize_label,
    parse_llm_answer,
    round_half_up,
    run_stage,
    status,
)

__all__ = [
    "RdiauditError",
    "average_catalogue_rdi",
    "build_query",
    "classify_pattern",
    "compute_rdi",
    "display",
    "distribution_summary",
    "heuristic_verdict",
    "ledger_summary",
    "median_lag",
    "mention_id",
    "normalize_label",
    "parse_llm_answer",
    "round_half_up",
    "run_stage",
    "status",
]
