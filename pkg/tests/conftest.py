"""
Shared fixtures for the latticeclimber test suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

# Add src to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from latticeclimber.core.types import AttackBudget  # noqa: E402
from latticeclimber.synth import RandomMixtureSpec, canonical_configuration, sample_random_mixture  # noqa: E402

BIAS_SETTINGS = [(0.5, 0.5), (0.2, 0.005), (0.2, 0.25), (0.8, 0.25)]


@pytest.fixture(params=["a", "b", "c", "d"])
def canonical(request):
    """(name, mixture, point, budget) for each two-classifier configuration."""
    mix, point, budget = canonical_configuration(request.param)
    return request.param, mix, point, budget


@pytest.fixture
def config_d():
    return canonical_configuration("d")


@pytest.fixture
def config_c():
    return canonical_configuration("c")


@pytest.fixture
def config_file(tmp_path):
    """Configuration whose output directories live under tmp_path."""
    path = tmp_path / "lattice.yaml"
    data = {
        "paths": {
            "results": str(tmp_path / "results"),
            "instances": str(tmp_path / "instances"),
            "metrics": str(tmp_path / "metrics"),
        },
        "logging": {"level": "WARNING"},
    }
    path.write_text(yaml.safe_dump(data))
    return path


def random_linear_instance(seed, d=8, m=4, bias_setting=0, epsilon=1.0):
    """Random binary linear instance from one of the four bias settings."""
    mu, sigma = BIAS_SETTINGS[bias_setting]
    spec = RandomMixtureSpec(d=d, m=m, bias_mean=mu, bias_std=sigma, seed=seed)
    mix, point = sample_random_mixture(spec)
    return mix, point, AttackBudget("l2", epsilon)


def unit_distances(mix, point):
    """Closed-form L2 distance of every classifier's boundary from the point."""
    return np.array([point.y * h.decision(point.x) / np.linalg.norm(h.theta) for h in mix.classifiers])
