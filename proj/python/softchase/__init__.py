"""Probabilistic reasoning over weighted existential rules."""

from ._core import (
    AnalysisError,
    BudgetError,
    ParseError,
    builtin_facts,
    builtin_programs,
    check_program,
    gen_scale_free,
    ground,
    infer_exact,
    infer_mcmc,
    run_chase,
    sample,
)

__all__ = [
    "AnalysisError",
    "BudgetError",
    "ParseError",
    "builtin_facts",
    "builtin_programs",
    "check_program",
    "gen_scale_free",
    "ground",
    "infer_exact",
    "infer_mcmc",
    "run_chase",
    "sample",
]
