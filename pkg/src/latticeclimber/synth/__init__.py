"""
Synthetic instance generators for latticeclimber.
"""

from .generators import (
    CANONICAL_CONFIGURATIONS,
    AngleInstance,
    RandomMixtureSpec,
    canonical_configuration,
    common_region_distance,
    critical_angle,
    make_angle_instance,
    sample_random_mixture,
    sample_random_mlp_mixture,
    sample_random_softmax_mixture,
    sample_weights,
    trial_seed,
)

__all__ = [
    "CANONICAL_CONFIGURATIONS",
    "AngleInstance",
    "RandomMixtureSpec",
    "canonical_configuration",
    "common_region_distance",
    "critical_angle",
    "make_angle_instance",
    "sample_random_mixture",
    "sample_random_mlp_mixture",
    "sample_random_softmax_mixture",
    "sample_weights",
    "trial_seed",
]
