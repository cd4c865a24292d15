"""
Domain types for attacking randomized mixtures of classifiers.

All types are immutable after construction: arrays are copied to float64 and
marked read-only, so instances can be shared freely between threads.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import FrozenSet, Optional, Sequence, Tuple

import numpy as np

from .errors import ContractViolation

WEIGHT_TOLERANCE = 1e-9


def _frozen_array(values, name: str, ndim: int) -> np.ndarray:
    """Copy ``values`` into a read-only float64 array of the given rank."""
    array = np.array(values, dtype=np.float64)
    if array.ndim != ndim:
        raise ContractViolation(f"{name} must have {ndim} dimension(s), got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise ContractViolation(f"{name} contains non-finite entries")
    array.setflags(write=False)
    return array


class Norm(Enum):
    """Threat-model norm."""
    L2 = "l2"
    LINF = "linf"

    @classmethod
    def parse(cls, name: str) -> "Norm":
        """Accept the usual spellings: l2, L2, linf, Linf, inf."""
        key = str(name).strip().lower()
        if key in ("l2", "2"):
            return cls.L2
        if key in ("linf", "inf", "l_inf", "l-inf"):
            return cls.LINF
        raise ContractViolation(f"unknown norm '{name}' (expected l2 or linf)")


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    """Binary linear classifier h(x) = sign(theta . x + bias), predicting +1 when f(x) >= 0."""

    theta: np.ndarray
    bias: float

    kind = "linear"

    def __post_init__(self):
        theta = _frozen_array(self.theta, "theta", 1)
        if theta.size < 1:
            raise ContractViolation("theta must have dimension d >= 1")
        if not np.any(theta != 0.0):
            raise ContractViolation("theta must have at least one nonzero entry")
        bias = float(self.bias)
        if not np.isfinite(bias):
            raise ContractViolation("bias must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "bias", bias)

    @property
    def input_dim(self) -> int:
        return int(self.theta.shape[0])

    def decision(self, x: np.ndarray) -> float:
        """Affine score f(x)."""
        return float(self.theta @ x + self.bias)

    def predict(self, x: np.ndarray) -> int:
        return 1 if self.decision(x) >= 0.0 else -1

    def is_fooled(self, x: np.ndarray, y: int) -> bool:
        # boundary counts as fooled: srh == 0 exactly on the fooled set
        return y * self.decision(x) <= 0.0


@dataclass(frozen=True, eq=False)
class AttackBudget:
    """Perturbation set B^eps(x) = {x + delta : ||delta|| <= eps}."""

    norm: Norm
    epsilon: float

    def __post_init__(self):
        norm = self.norm if isinstance(self.norm, Norm) else Norm.parse(self.norm)
        epsilon = float(self.epsilon)
        if not np.isfinite(epsilon) or epsilon <= 0.0:
            raise ContractViolation(f"epsilon must be a positive real, got {self.epsilon}")
        object.__setattr__(self, "norm", norm)
        object.__setattr__(self, "epsilon", epsilon)

    def measure(self, delta: np.ndarray) -> float:
        """Norm of ``delta`` under this budget's norm."""
        if self.norm is Norm.L2:
            return float(np.linalg.norm(delta))
        return float(np.max(np.abs(delta))) if delta.size else 0.0

    def contains(self, delta: np.ndarray, tol: float = 1e-9) -> bool:
        return self.measure(delta) <= self.epsilon + tol


@dataclass(frozen=True, eq=False)
class LabeledPoint:
    """Input point and its true label (+/-1 for binary, 0..k-1 for multi-class)."""

    x: np.ndarray
    y: int

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen_array(self.x, "x", 1))
        object.__setattr__(self, "y", int(self.y))

    @property
    def dim(self) -> int:
        return int(self.x.shape[0])


@dataclass(frozen=True, eq=False)
class Mixture:
    """Randomized ensemble: classifiers h_1..h_m drawn with probabilities q."""

    classifiers: Tuple
    weights: np.ndarray

    def __post_init__(self):
        classifiers = tuple(self.classifiers)
        if len(classifiers) < 1:
            raise ContractViolation("a mixture needs at least one classifier")
        kinds = {c.kind for c in classifiers}
        if len(kinds) != 1:
            raise ContractViolation(f"all classifiers must have the same kind, got {sorted(kinds)}")
        dims = {c.input_dim for c in classifiers}
        if len(dims) != 1:
            raise ContractViolation(f"all classifiers must share the input dimension, got {sorted(dims)}")
        n_classes = {getattr(c, "num_classes", 2) for c in classifiers}
        if len(n_classes) != 1:
            raise ContractViolation(f"all classifiers must share the class count, got {sorted(n_classes)}")

        weights = _frozen_array(self.weights, "weights", 1)
        if weights.shape[0] != len(classifiers):
            raise ContractViolation(
                f"expected {len(classifiers)} weights, got {weights.shape[0]}"
            )
        if np.any(weights < 0.0):
            raise ContractViolation("mixture weights must be nonnegative")
        total = float(np.sum(weights))
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ContractViolation(f"mixture weights must sum to 1 (got {total!r})")

        object.__setattr__(self, "classifiers", classifiers)
        object.__setattr__(self, "weights", weights)

    @property
    def m(self) -> int:
        return len(self.classifiers)

    @property
    def input_dim(self) -> int:
        return self.classifiers[0].input_dim

    @property
    def kind(self) -> str:
        return self.classifiers[0].kind

    @property
    def num_classes(self) -> int:
        return getattr(self.classifiers[0], "num_classes", 2)

    @property
    def is_binary_linear(self) -> bool:
        return self.kind == LinearClassifier.kind

    def weight_of(self, indices) -> float:
        return float(sum(self.weights[i] for i in sorted(indices)))


@dataclass(frozen=True)
class TraceRecord:
    """One outer-loop step of an attack, for debugging and monotonicity checks.

    ``srh_value`` holds the step objective: the pool SRH for the climbing
    attacks, the boundary distance for ARC.
    """

    step: int
    classifier: int
    pool: Tuple[int, ...]
    srh_value: float
    score: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class AttackOutcome:
    """Result of one attack run on one point."""

    delta: np.ndarray
    fooled: FrozenSet[int]
    score: float
    iterations_used: int
    attack: str = ""
    fingerprint: str = ""
    trace: Tuple[TraceRecord, ...] = field(default_factory=tuple)

    def __post_init__(self):
        delta = np.array(self.delta, dtype=np.float64)
        delta.setflags(write=False)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "fooled", frozenset(int(i) for i in self.fooled))
        object.__setattr__(self, "trace", tuple(self.trace))


def as_index_set(indices: Optional[Sequence[int]]) -> FrozenSet[int]:
    """Normalize any iterable of classifier indices to a frozenset of ints."""
    return frozenset(int(i) for i in (indices or ()))
