"""
Loss functions, norm-ball geometry and closed-form margins for mixtures.
"""

from typing import FrozenSet, Iterable, Optional, Tuple

import numpy as np

from .errors import ContractViolation
from .types import AttackBudget, LabeledPoint, LinearClassifier, Mixture, Norm


def check_dims(mix: Mixture, point: LabeledPoint, delta: Optional[np.ndarray] = None) -> None:
    """Raise ContractViolation unless the point (and delta, if given) match the mixture input dimension."""
    if point.dim != mix.input_dim:
        raise ContractViolation(
            f"point has dimension {point.dim}, mixture expects {mix.input_dim}"
        )
    if delta is not None and np.shape(delta) != (mix.input_dim,):
        raise ContractViolation(
            f"delta has shape {np.shape(delta)}, expected ({mix.input_dim},)"
        )


def _require_linear(mix: Mixture) -> None:
    if not mix.is_binary_linear:
        raise ContractViolation(f"operation needs binary linear classifiers, got kind '{mix.kind}'")


def fooled_set(mix: Mixture, point: LabeledPoint, delta: np.ndarray) -> FrozenSet[int]:
    """Indices of the classifiers that misclassify x + delta."""
    check_dims(mix, point, delta)
    x_adv = point.x + np.asarray(delta, dtype=np.float64)
    return frozenset(i for i, h in enumerate(mix.classifiers) if h.is_fooled(x_adv, point.y))


def zero_one_loss_mixture(mix: Mixture, point: LabeledPoint, delta: np.ndarray) -> float:
    """Expected 0-1 loss of the mixture at x + delta: sum of q_i over fooled classifiers."""
    fooled = fooled_set(mix, point, delta)
    return mix.weight_of(fooled)


def project_to_ball(delta: np.ndarray, budget: AttackBudget) -> np.ndarray:
    """Euclidean projection onto B^eps(0) for the budget's norm."""
    delta = np.asarray(delta, dtype=np.float64)
    if budget.norm is Norm.L2:
        norm = float(np.linalg.norm(delta))
        if norm <= budget.epsilon:
            return delta.copy()
        return delta * (budget.epsilon / norm)
    return np.clip(delta, -budget.epsilon, budget.epsilon)


def sample_in_ball(budget: AttackBudget, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from B^eps(0)."""
    if budget.norm is Norm.L2:
        direction = rng.standard_normal(dim)
        norm = float(np.linalg.norm(direction))
        if norm == 0.0:
            return np.zeros(dim)
        radius = budget.epsilon * rng.uniform() ** (1.0 / dim)
        return direction * (radius / norm)
    return rng.uniform(-budget.epsilon, budget.epsilon, size=dim)


def reverse_hinge(margin: float) -> float:
    """l_rev(margin) = max(margin, 0); zero exactly when the classifier is fooled."""
    return max(float(margin), 0.0)


def normalize_linear(h: LinearClassifier) -> LinearClassifier:
    """Same decision function, unit L2 normal."""
    scale = float(np.linalg.norm(h.theta))
    return LinearClassifier(theta=h.theta / scale, bias=h.bias / scale)


def stack_linear(
    mix: Mixture,
    indices: Iterable[int],
    unit: bool = False,
) -> Tuple[np.ndarray, np.ndarray]:
    """Stack the normals and biases of the selected linear classifiers.

    Args:
        mix: Binary linear mixture
        indices: Classifier indices, in the order rows should appear
        unit: Rescale every row to a unit L2 normal

    Returns:
        Tuple of (thetas with shape (|I|, d), biases with shape (|I|,))
    """
    _require_linear(mix)
    order = list(indices)
    if not order:
        return np.zeros((0, mix.input_dim)), np.zeros(0)
    thetas = np.stack([mix.classifiers[i].theta for i in order])
    biases = np.array([mix.classifiers[i].bias for i in order])
    if unit:
        scale = np.linalg.norm(thetas, axis=1)
        thetas = thetas / scale[:, None]
        biases = biases / scale
    return thetas, biases


def linear_margins(
    mix: Mixture,
    indices: Iterable[int],
    point: LabeledPoint,
    delta: np.ndarray,
    unit: bool = False,
) -> np.ndarray:
    """Signed margins y * f_i(x + delta) for the selected classifiers."""
    thetas, biases = stack_linear(mix, indices, unit=unit)
    return point.y * (thetas @ (point.x + delta) + biases)


def srh(indices: Iterable[int], mix: Mixture, point: LabeledPoint, delta: np.ndarray) -> float:
    """Averaged sum of reverse hinge losses over the pool ``indices`` at x + delta."""
    pool = sorted(set(int(i) for i in indices))
    if not pool:
        raise ContractViolation("srh needs a nonempty index set")
    _require_linear(mix)
    check_dims(mix, point, delta)
    margins = linear_margins(mix, pool, point, np.asarray(delta, dtype=np.float64))
    return float(np.mean(np.maximum(margins, 0.0)))


def linear_margin_and_direction(
    h: LinearClassifier,
    point: LabeledPoint,
    budget: AttackBudget,
) -> Tuple[float, np.ndarray]:
    """Closed-form distance to the decision boundary and the unit step that reaches it.

    Returns:
        Tuple of (distance under the budget norm, direction with unit budget norm);
        (0, zero vector) when the point is already misclassified.
    """
    if point.dim != h.input_dim:
        raise ContractViolation(f"point has dimension {point.dim}, classifier expects {h.input_dim}")
    margin = point.y * h.decision(point.x)
    if margin <= 0.0:
        return 0.0, np.zeros(h.input_dim)
    if budget.norm is Norm.L2:
        scale = float(np.linalg.norm(h.theta))
        return margin / scale, -point.y * h.theta / scale
    scale = float(np.sum(np.abs(h.theta)))
    return margin / scale, -point.y * np.sign(h.theta)
