"""
Synthetic instance generators.

Two-classifier angle instances, random high-dimensional linear mixtures with
temperature-softmax weights, random multi-class mixtures, and the four
canonical two-classifier configurations. Every generator is a pure function
of its seed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from ..core.errors import ContractViolation
from ..core.types import AttackBudget, LabeledPoint, LinearClassifier, Mixture, Norm
from ..diff.classifiers import MlpClassifier, SoftmaxLinearClassifier, predict

logger = logging.getLogger(__name__)

# warn when more than this fraction of bias draws had to be redrawn
RESAMPLE_WARNING_FRACTION = 0.5

MAX_REDRAWS = 10000


@dataclass(frozen=True)
class AngleInstance:
    """Two classifiers at distance r from the origin whose normals form the angle theta."""

    r: float
    theta: float
    weights: Tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        if not 0.0 < self.theta < math.pi:
            raise ContractViolation(f"theta must lie in (0, pi), got {self.theta}")
        if not self.r > 0.0:
            raise ContractViolation(f"r must be positive, got {self.r}")

    @property
    def common_region_distance(self) -> float:
        return common_region_distance(self.r, self.theta)

    def build(self) -> Tuple[Mixture, LabeledPoint]:
        half = self.theta / 2.0
        classifiers = (
            LinearClassifier(theta=[math.cos(half), math.sin(half)], bias=-self.r),
            LinearClassifier(theta=[math.cos(half), -math.sin(half)], bias=-self.r),
        )
        mix = Mixture(classifiers=classifiers, weights=self.weights)
        return mix, LabeledPoint(x=np.zeros(2), y=-1)


def make_angle_instance(r: float, theta: float, weights: Optional[Sequence[float]] = None) -> Tuple[Mixture, LabeledPoint]:
    """Angle instance with normals at +/- theta/2 around e1, point at the origin labeled -1."""
    instance = AngleInstance(r=float(r), theta=float(theta), weights=tuple(weights or (0.5, 0.5)))
    return instance.build()


def critical_angle(r: float, epsilon: float) -> float:
    """Largest angle at which both classifiers can be fooled together; 0 when r >= epsilon."""
    if r >= epsilon:
        return 0.0
    return 2.0 * math.acos(r / epsilon)


def common_region_distance(r: float, theta: float) -> float:
    """Distance from the origin to the nearest point fooling both angle classifiers."""
    return r / math.cos(theta / 2.0)


@dataclass(frozen=True)
class RandomMixtureSpec:
    """Random binary linear mixture: unit normals, N(mu, sigma^2) biases, softmax weights."""

    d: int
    m: int
    bias_mean: float = 0.5
    bias_std: float = 0.5
    weight_temperature: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.m < 1:
            raise ContractViolation(f"need d >= 1 and m >= 1, got d={self.d}, m={self.m}")
        if self.bias_std < 0.0 or self.weight_temperature <= 0.0:
            raise ContractViolation("bias_std must be nonnegative and weight_temperature positive")


def sample_weights(m: int, temperature: float, rng: np.random.Generator) -> np.ndarray:
    """q = softmax(z / temperature) with z standard normal."""
    z = rng.standard_normal(m)
    return softmax(z / temperature)


def _positive_normal(mean: float, std: float, size: int, rng: np.random.Generator) -> Tuple[np.ndarray, int]:
    values = rng.normal(mean, std, size)
    redraws = 0
    bad = values <= 0.0
    while np.any(bad):
        redraws += int(bad.sum())
        if redraws > MAX_REDRAWS * size:
            raise ContractViolation(f"N({mean}, {std}^2) almost never yields a positive bias")
        values[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = values <= 0.0
    return values, redraws


def sample_random_mixture(spec: RandomMixtureSpec) -> Tuple[Mixture, LabeledPoint]:
    """Random linear mixture around the origin, labeled -1 and correctly classified by every member."""
    rng = np.random.default_rng(spec.seed)
    normals = rng.standard_normal((spec.m, spec.d))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    distances, redraws = _positive_normal(spec.bias_mean, spec.bias_std, spec.m, rng)
    if redraws > RESAMPLE_WARNING_FRACTION * spec.m:
        logger.warning(
            f"redrew {redraws} nonpositive biases for m={spec.m} "
            f"(mu={spec.bias_mean}, sigma={spec.bias_std})"
        )
    weights = sample_weights(spec.m, spec.weight_temperature, rng)
    classifiers = tuple(LinearClassifier(theta=n, bias=-b) for n, b in zip(normals, distances))
    return Mixture(classifiers=classifiers, weights=weights), LabeledPoint(x=np.zeros(spec.d), y=-1)


def _draw_agreeing(draw, x: np.ndarray, m: int):
    """Draw m classifiers that all predict the first one's label at x."""
    first = draw()
    label = predict(first, x)
    classifiers = [first]
    while len(classifiers) < m:
        for _ in range(MAX_REDRAWS):
            candidate = draw()
            if predict(candidate, x) == label:
                classifiers.append(candidate)
                break
        else:
            raise ContractViolation(f"could not draw a classifier predicting class {label}")
    return classifiers, label


def sample_random_softmax_mixture(
    d: int,
    k: int,
    m: int,
    scale: float = 1.0,
    seed: int = 0,
    temperature: float = 10.0,
) -> Tuple[Mixture, LabeledPoint]:
    """Random softmax-linear mixture whose members agree on the label of x = 0."""
    rng = np.random.default_rng(seed)

    def draw():
        return SoftmaxLinearClassifier(
            weight=scale * rng.standard_normal((k, d)),
            bias=scale * rng.standard_normal(k),
        )

    x = np.zeros(d)
    classifiers, label = _draw_agreeing(draw, x, m)
    weights = sample_weights(m, temperature, rng)
    return Mixture(classifiers=tuple(classifiers), weights=weights), LabeledPoint(x=x, y=label)


def sample_random_mlp_mixture(
    d: int,
    k: int,
    hidden: int,
    m: int,
    scale: float = 1.0,
    seed: int = 0,
    temperature: float = 10.0,
) -> Tuple[Mixture, LabeledPoint]:
    """Random tanh-MLP mixture whose members agree on the label of x = 0."""
    rng = np.random.default_rng(seed)

    def draw():
        return MlpClassifier(
            hidden_weight=scale * rng.standard_normal((hidden, d)),
            hidden_bias=scale * rng.standard_normal(hidden),
            output_weight=scale * rng.standard_normal((k, hidden)),
            output_bias=scale * rng.standard_normal(k),
        )

    x = np.zeros(d)
    classifiers, label = _draw_agreeing(draw, x, m)
    weights = sample_weights(m, temperature, rng)
    return Mixture(classifiers=tuple(classifiers), weights=weights), LabeledPoint(x=x, y=label)


CANONICAL_CONFIGURATIONS = {
    "a": {"classifiers": [((1.0, 0.0), -2.0), ((-1.0, 0.0), -2.0)], "epsilon": 1.0, "weights": (0.6, 0.4)},
    "b": {"classifiers": [((1.0, 0.0), -2.0), ((-1.0, 0.0), -0.5)], "epsilon": 0.8, "weights": (0.4, 0.6)},
    "c": {"classifiers": [((1.0, 0.0), -0.5), ((-1.0, 0.0), -0.5)], "epsilon": 0.8, "weights": (0.6, 0.4)},
    "d": {"classifiers": [((1.0, 0.0), -0.5), ((0.0, 1.0), -0.5)], "epsilon": 0.8, "weights": (0.6, 0.4)},
}


def canonical_configuration(
    name: str,
    weights: Optional[Sequence[float]] = None,
) -> Tuple[Mixture, LabeledPoint, AttackBudget]:
    """One of the four two-classifier configurations (a: none vulnerable, b: one,
    c: both but never together, d: both together), at x = 0 with label -1.
    """
    key = str(name).strip().lower()
    if key not in CANONICAL_CONFIGURATIONS:
        raise ContractViolation(f"unknown configuration '{name}' (expected a, b, c or d)")
    entry = CANONICAL_CONFIGURATIONS[key]
    classifiers = tuple(LinearClassifier(theta=theta, bias=bias) for theta, bias in entry["classifiers"])
    mix = Mixture(classifiers=classifiers, weights=weights if weights is not None else entry["weights"])
    return mix, LabeledPoint(x=np.zeros(2), y=-1), AttackBudget(Norm.L2, entry["epsilon"])


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial seed derived from (base_seed, trial_index)."""
    return int(np.random.SeedSequence([int(base_seed), int(trial_index)]).generate_state(1)[0])
