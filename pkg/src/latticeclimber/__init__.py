"""
latticeclimber - adversarial attacks on randomized mixtures of classifiers.

Climbs the lattice of vulnerability regions of a mixture, compares against
the APGD and ARC baselines, and certifies results with an exhaustive oracle
on small instances.
"""

__version__ = "1.0.0"
__author__ = "latticeclimber Team"

# Import core modules
from .core import (
    AttackBudget,
    AttackOutcome,
    Config,
    ExperimentConfig,
    ExperimentRunner,
    InstanceSchema,
    LabeledPoint,
    LinearClassifier,
    Mixture,
    Norm,
    zero_one_loss_mixture,
)

# Import classifier modules
from .diff import MlpClassifier, SoftmaxLinearClassifier

# Import attack modules
from .attacks import AttackKind, AttackSpec, Ordering, run_attack

# Import oracle modules
from .oracle import certify, enumerate_lattice, membership

__all__ = [
    # Core
    "AttackBudget",
    "AttackOutcome",
    "Config",
    "ExperimentConfig",
    "ExperimentRunner",
    "InstanceSchema",
    "LabeledPoint",
    "LinearClassifier",
    "Mixture",
    "Norm",
    "zero_one_loss_mixture",

    # Classifiers
    "MlpClassifier",
    "SoftmaxLinearClassifier",

    # Attacks
    "AttackKind",
    "AttackSpec",
    "Ordering",
    "run_attack",

    # Oracle
    "certify",
    "enumerate_lattice",
    "membership",
]
