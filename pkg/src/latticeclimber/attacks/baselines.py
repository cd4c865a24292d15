"""
Baseline attacks: PGD on the whole mixture (APGD) and the greedy closed-form attack (ARC).
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..core.losses import (
    check_dims,
    fooled_set,
    linear_margin_and_direction,
    project_to_ball,
    stack_linear,
    zero_one_loss_mixture,
)
from ..core.types import AttackBudget, AttackOutcome, LabeledPoint, Mixture, Norm, TraceRecord
from ..optim.pgd import pgd_minimize
from .spec import AttackKind, AttackSpec, build_outcome, classifier_order, default_spec, fully_fooled_at_origin

logger = logging.getLogger(__name__)


def _mixture_surrogate(mix: Mixture, point: LabeledPoint):
    """Weighted reverse hinge of every classifier's surrogate margin, and its gradient."""
    weights = np.asarray(mix.weights)
    y = point.y

    if mix.is_binary_linear:
        thetas, biases = stack_linear(mix, range(mix.m))

        def surrogate_margins(delta: np.ndarray) -> np.ndarray:
            return y * (thetas @ (point.x + delta) + biases)

        def surrogate_grads(delta: np.ndarray) -> np.ndarray:
            return y * thetas

    else:

        def _runner_up(z: np.ndarray) -> int:
            others = z.copy()
            others[y] = -np.inf
            return int(np.argmax(others))

        def surrogate_margins(delta: np.ndarray) -> np.ndarray:
            values = []
            for h in mix.classifiers:
                z = h.logits(point.x + delta)
                values.append(z[y] - z[_runner_up(z)])
            return np.array(values)

        def surrogate_grads(delta: np.ndarray) -> np.ndarray:
            rows = []
            for h in mix.classifiers:
                x_adv = point.x + delta
                jac = h.jacobian(x_adv)
                rows.append(jac[y] - jac[_runner_up(h.logits(x_adv))])
            return np.stack(rows)

    def objective(delta: np.ndarray) -> float:
        return float(weights @ np.maximum(surrogate_margins(delta), 0.0))

    def grad(delta: np.ndarray) -> np.ndarray:
        active = (surrogate_margins(delta) > 0.0).astype(np.float64)
        return (weights * active) @ surrogate_grads(delta)

    return objective, grad


def apgd(mix: Mixture, point: LabeledPoint, budget: AttackBudget, spec: AttackSpec) -> AttackOutcome:
    """PGD on the weighted surrogate loss of all classifiers at once.

    Every classifier that is not yet fooled pulls on the perturbation with
    its weight, so opposing classifiers can cancel each other out. The loss is
    the q-weighted reverse hinge, so classifiers already fooled stop pulling.
    """
    check_dims(mix, point)
    delta = np.zeros(mix.input_dim)
    if fully_fooled_at_origin(mix, point):
        return build_outcome(mix, point, budget, delta, 0, AttackKind.APGD.value)

    cfg = spec.pgd or default_spec(AttackKind.APGD, budget).pgd
    objective, grad = _mixture_surrogate(mix, point)
    result = pgd_minimize(objective, grad, budget, cfg, delta, seed=spec.seed)
    logger.debug(f"apgd surrogate {result.best_value:.6g} after {result.iterations} steps")
    return build_outcome(mix, point, budget, result.best_delta, result.iterations, AttackKind.APGD.value)


def _linearized_step(h, x_adv: np.ndarray, y: int, norm: Norm) -> Tuple[float, Optional[np.ndarray]]:
    """Distance to, and unit direction towards, the closest linearized wrong-class boundary."""
    z = h.logits(x_adv)
    jac = h.jacobian(x_adv)
    best_distance, best_direction = np.inf, None
    for j in range(h.num_classes):
        if j == y:
            continue
        gap = float(z[y] - z[j])
        gradient = jac[j] - jac[y]
        if norm is Norm.L2:
            scale = float(np.linalg.norm(gradient))
            direction = gradient / scale if scale > 0.0 else None
        else:
            scale = float(np.sum(np.abs(gradient)))
            direction = np.sign(gradient) if scale > 0.0 else None
        if direction is None:
            continue
        distance = max(gap, 0.0) / scale
        if distance < best_distance:
            best_distance, best_direction = distance, direction
    return best_distance, best_direction


def arc(mix: Mixture, point: LabeledPoint, budget: AttackBudget, spec: AttackSpec) -> AttackOutcome:
    """Greedy single pass: step across each unfooled classifier's (linearized) boundary.

    A candidate is kept only if it fools the classifier being attacked and
    does not lower the mixture 0-1 loss. A step that raises the score only
    through other classifiers, while missing the attacked one, is dropped.
    """
    check_dims(mix, point)
    delta = np.zeros(mix.input_dim)
    if fully_fooled_at_origin(mix, point):
        return build_outcome(mix, point, budget, delta, 0, AttackKind.ARC.value)

    score = zero_one_loss_mixture(mix, point, delta)
    computations = 0
    trace = []
    for step, i in enumerate(classifier_order(mix, spec.ordering, spec.seed)):
        h = mix.classifiers[i]
        x_adv = point.x + delta
        if h.is_fooled(x_adv, point.y):
            continue
        computations += 1
        if mix.is_binary_linear:
            distance, direction = linear_margin_and_direction(h, LabeledPoint(x=x_adv, y=point.y), budget)
        else:
            distance, direction = _linearized_step(h, x_adv, point.y, budget.norm)
        if direction is None or not np.any(direction):
            continue

        candidate = project_to_ball(delta + (distance + spec.slack) * direction, budget)
        candidate_score = zero_one_loss_mixture(mix, point, candidate)
        accepted = h.is_fooled(point.x + candidate, point.y) and candidate_score >= score
        if accepted:
            delta, score = candidate, candidate_score
        pool = tuple(sorted(fooled_set(mix, point, delta)))
        trace.append(TraceRecord(step, i, pool, distance, score, accepted))
        logger.debug(f"step {step}: classifier {i} at distance {distance:.4g}, accepted={accepted}")

    return build_outcome(mix, point, budget, delta, computations, AttackKind.ARC.value, trace)
