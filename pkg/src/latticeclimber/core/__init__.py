"""
latticeclimber core module

Contains the domain types, losses, file formats, configuration and the
experiment runner.
"""

from .errors import (
    ConfigError,
    ContractViolation,
    InstanceFormatError,
    LatticeClimberError,
    LatticeSizeError,
    NumericalError,
)
from .types import (
    AttackBudget,
    AttackOutcome,
    LabeledPoint,
    LinearClassifier,
    Mixture,
    Norm,
    TraceRecord,
)
from .losses import (
    check_dims,
    fooled_set,
    linear_margins,
    normalize_linear,
    project_to_ball,
    reverse_hinge,
    sample_in_ball,
    srh,
    zero_one_loss_mixture,
)
from .schema import InstanceSchema, instance_fingerprint
from .config import Config, ExperimentConfig, ExperimentKind
from .runner import ExperimentRunner, gap_trend, replay_trial

__all__ = [
    "ConfigError",
    "ContractViolation",
    "InstanceFormatError",
    "LatticeClimberError",
    "LatticeSizeError",
    "NumericalError",
    "AttackBudget",
    "AttackOutcome",
    "LabeledPoint",
    "LinearClassifier",
    "Mixture",
    "Norm",
    "TraceRecord",
    "check_dims",
    "fooled_set",
    "linear_margins",
    "normalize_linear",
    "project_to_ball",
    "reverse_hinge",
    "sample_in_ball",
    "srh",
    "zero_one_loss_mixture",
    "InstanceSchema",
    "instance_fingerprint",
    "Config",
    "ExperimentConfig",
    "ExperimentKind",
    "ExperimentRunner",
    "gap_trend",
    "replay_trial",
]
