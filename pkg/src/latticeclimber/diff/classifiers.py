"""
Multi-class differentiable classifiers with analytic input gradients.

Two architectures are provided: a softmax-linear model (logits W x + c) and a
one-hidden-layer tanh network. Margins are always taken on logits.
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core.errors import ContractViolation
from ..core.types import LabeledPoint, LinearClassifier, _frozen_array

logger = logging.getLogger(__name__)


class TargetSelection(Enum):
    """How the adversarial target class is chosen."""
    LARGEST_OTHER_LOGIT = "largest_other_logit"


class DifferentiableClassifier:
    """Shared behavior of the multi-class classifiers: prediction and fooling test."""

    kind = "differentiable"

    @property
    def input_dim(self) -> int:
        raise NotImplementedError

    @property
    def num_classes(self) -> int:
        raise NotImplementedError

    def logits(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def is_fooled(self, x: np.ndarray, y: int) -> bool:
        return int(np.argmax(self.logits(x))) != y


@dataclass(frozen=True, eq=False)
class SoftmaxLinearClassifier(DifferentiableClassifier):
    """h(x) = softmax(W x + c) with W of shape (k, d)."""

    weight: np.ndarray
    bias: np.ndarray

    kind = "softmax_linear"

    def __post_init__(self):
        weight = _frozen_array(self.weight, "weight", 2)
        bias = _frozen_array(self.bias, "bias", 1)
        k, d = weight.shape
        if k < 2 or d < 1:
            raise ContractViolation(f"softmax-linear needs k >= 2 and d >= 1, got k={k}, d={d}")
        if bias.shape != (k,):
            raise ContractViolation(f"bias must have shape ({k},), got {bias.shape}")
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "bias", bias)

    @property
    def input_dim(self) -> int:
        return int(self.weight.shape[1])

    @property
    def num_classes(self) -> int:
        return int(self.weight.shape[0])

    def logits(self, x: np.ndarray) -> np.ndarray:
        return self.weight @ x + self.bias

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return np.array(self.weight)


@dataclass(frozen=True, eq=False)
class MlpClassifier(DifferentiableClassifier):
    """Logits W2 tanh(W1 x + b1) + b2 with W1 of shape (p, d) and W2 of shape (k, p)."""

    hidden_weight: np.ndarray
    hidden_bias: np.ndarray
    output_weight: np.ndarray
    output_bias: np.ndarray

    kind = "mlp"

    def __post_init__(self):
        w1 = _frozen_array(self.hidden_weight, "hidden_weight", 2)
        b1 = _frozen_array(self.hidden_bias, "hidden_bias", 1)
        w2 = _frozen_array(self.output_weight, "output_weight", 2)
        b2 = _frozen_array(self.output_bias, "output_bias", 1)
        p, d = w1.shape
        k = w2.shape[0]
        if p < 1 or d < 1:
            raise ContractViolation(f"MLP needs hidden width p >= 1 and d >= 1, got p={p}, d={d}")
        if k < 2:
            raise ContractViolation(f"MLP needs k >= 2 classes, got {k}")
        if b1.shape != (p,) or w2.shape != (k, p) or b2.shape != (k,):
            raise ContractViolation(
                f"inconsistent MLP shapes: W1 {w1.shape}, b1 {b1.shape}, W2 {w2.shape}, b2 {b2.shape}"
            )
        object.__setattr__(self, "hidden_weight", w1)
        object.__setattr__(self, "hidden_bias", b1)
        object.__setattr__(self, "output_weight", w2)
        object.__setattr__(self, "output_bias", b2)

    @property
    def input_dim(self) -> int:
        return int(self.hidden_weight.shape[1])

    @property
    def hidden_width(self) -> int:
        return int(self.hidden_weight.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.output_weight.shape[0])

    def logits(self, x: np.ndarray) -> np.ndarray:
        hidden = np.tanh(self.hidden_weight @ x + self.hidden_bias)
        return self.output_weight @ hidden + self.output_bias

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        hidden = np.tanh(self.hidden_weight @ x + self.hidden_bias)
        # d tanh(u) / du = 1 - tanh(u)^2
        return (self.output_weight * (1.0 - hidden ** 2)) @ self.hidden_weight


def _check_input(h: DifferentiableClassifier, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (h.input_dim,):
        raise ContractViolation(f"input has shape {x.shape}, classifier expects ({h.input_dim},)")
    return x


def _check_label(h: DifferentiableClassifier, y: int, name: str = "y") -> int:
    y = int(y)
    if not 0 <= y < h.num_classes:
        raise ContractViolation(f"{name}={y} outside the class range [0, {h.num_classes})")
    return y


def logits(h: DifferentiableClassifier, x: np.ndarray) -> np.ndarray:
    """Pre-softmax scores of ``h`` at ``x``."""
    return h.logits(_check_input(h, x))


def predict(h: DifferentiableClassifier, x: np.ndarray) -> int:
    """Predicted class; np.argmax breaks ties towards the lowest index."""
    return int(np.argmax(logits(h, x)))


def probabilities(h: DifferentiableClassifier, x: np.ndarray) -> np.ndarray:
    scores = logits(h, x)
    shifted = np.exp(scores - np.max(scores))
    return shifted / np.sum(shifted)


def logit_jacobian(h: DifferentiableClassifier, x: np.ndarray) -> np.ndarray:
    """Input gradients of every logit, shape (k, d)."""
    return h.jacobian(_check_input(h, x))


def select_target(h: DifferentiableClassifier, x: np.ndarray, y: int) -> int:
    """Class with the largest logit among the wrong classes."""
    y = _check_label(h, y)
    scores = logits(h, x).copy()
    scores[y] = -np.inf
    return int(np.argmax(scores))


def multiclass_rev_margin(h: DifferentiableClassifier, x: np.ndarray, y: int, y_adv: int) -> float:
    """max(logit_y - logit_{y_adv}, 0)."""
    y = _check_label(h, y)
    y_adv = _check_label(h, y_adv, "y_adv")
    if y == y_adv:
        raise ContractViolation("target class must differ from the true class")
    scores = logits(h, x)
    return max(float(scores[y] - scores[y_adv]), 0.0)


def raw_margin(h: DifferentiableClassifier, x: np.ndarray, y: int, y_adv: int) -> float:
    """Signed logit margin logit_y - logit_{y_adv} (no hinge)."""
    scores = logits(h, x)
    return float(scores[y] - scores[y_adv])


def input_gradient(h: DifferentiableClassifier, x: np.ndarray, y: int, y_adv: int) -> np.ndarray:
    """Gradient of multiclass_rev_margin w.r.t. x; zero on the flat side of the hinge."""
    y = _check_label(h, y)
    y_adv = _check_label(h, y_adv, "y_adv")
    if y == y_adv:
        raise ContractViolation("target class must differ from the true class")
    x = _check_input(h, x)
    scores = h.logits(x)
    if scores[y] - scores[y_adv] <= 0.0:
        return np.zeros(h.input_dim)
    jac = h.jacobian(x)
    return jac[y] - jac[y_adv]


def reduce_to_binary(h: SoftmaxLinearClassifier) -> LinearClassifier:
    """Binary equivalent of a two-class softmax-linear model (class 0 <-> +1, class 1 <-> -1)."""
    if not isinstance(h, SoftmaxLinearClassifier) or h.num_classes != 2:
        raise ContractViolation("only two-class softmax-linear classifiers reduce to a binary one")
    return LinearClassifier(theta=h.weight[0] - h.weight[1], bias=h.bias[0] - h.bias[1])


def lift_to_softmax(h: LinearClassifier) -> SoftmaxLinearClassifier:
    """Two-class softmax-linear model whose logit difference is h's decision function."""
    zeros = np.zeros_like(h.theta)
    return SoftmaxLinearClassifier(weight=np.stack([h.theta, zeros]), bias=np.array([h.bias, 0.0]))


def binary_label_to_class(y: int) -> int:
    return 0 if int(y) == 1 else 1


def class_to_binary_label(label: int) -> int:
    return 1 if int(label) == 0 else -1


def lift_point(point: LabeledPoint) -> LabeledPoint:
    """Binary-labeled point re-labeled for the lifted two-class model."""
    return LabeledPoint(x=point.x, y=binary_label_to_class(point.y))
