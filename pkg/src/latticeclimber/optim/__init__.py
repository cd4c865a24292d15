"""
Optimization module for latticeclimber.
"""

from .pgd import (
    IntersectionResult,
    PgdConfig,
    PgdResult,
    StepRule,
    default_stages,
    find_intersection,
    hinge_objective,
    lemma1_params,
    pgd_minimize,
    refine_params,
)

__all__ = [
    "IntersectionResult",
    "PgdConfig",
    "PgdResult",
    "StepRule",
    "default_stages",
    "find_intersection",
    "hinge_objective",
    "lemma1_params",
    "pgd_minimize",
    "refine_params",
]
