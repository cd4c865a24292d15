"""
Attacks module for latticeclimber.

Contains the lattice climbing attacks and the APGD and ARC baselines.
"""

from .baselines import apgd, arc
from .dispatch import ATTACKS, resolve_kind, run_attack
from .lca import lca_binary_linear, lca_multiclass
from .spec import (
    AttackKind,
    AttackSpec,
    Ordering,
    build_outcome,
    classifier_order,
    default_spec,
)

__all__ = [
    "ATTACKS",
    "AttackKind",
    "AttackSpec",
    "Ordering",
    "apgd",
    "arc",
    "build_outcome",
    "classifier_order",
    "default_spec",
    "lca_binary_linear",
    "lca_multiclass",
    "resolve_kind",
    "run_attack",
]
