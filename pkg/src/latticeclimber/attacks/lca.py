"""
Lattice climbing attacks.

The pool of simultaneously fooled classifiers grows one classifier at a time,
in the configured visiting order, each step asking the intersection finder for a
point that fools the whole tentative pool.
"""

import logging
from typing import Dict, List, Sequence

import numpy as np

from ..core.errors import ContractViolation
from ..core.losses import check_dims, fooled_set, stack_linear, zero_one_loss_mixture
from ..core.types import AttackBudget, AttackOutcome, LabeledPoint, Mixture, TraceRecord
from ..diff.classifiers import select_target
from ..optim.pgd import find_intersection
from .spec import AttackKind, AttackSpec, build_outcome, classifier_order, fully_fooled_at_origin

logger = logging.getLogger(__name__)


def linear_pool_margins(mix: Mixture, point: LabeledPoint, pool: Sequence[int]):
    """Signed-distance margins of the pool and their (constant) gradients."""
    # unit normals keep the averaged hinge 1-Lipschitz
    thetas, biases = stack_linear(mix, pool, unit=True)
    grads = point.y * thetas

    def margins(delta: np.ndarray) -> np.ndarray:
        return point.y * (thetas @ (point.x + delta) + biases)

    def margin_grads(delta: np.ndarray) -> np.ndarray:
        return grads

    return margins, margin_grads


def lca_binary_linear(mix: Mixture, point: LabeledPoint, budget: AttackBudget, spec: AttackSpec) -> AttackOutcome:
    """Climb the vulnerability lattice of a binary linear mixture.

    A classifier joins the pool only when the intersection finder verifies a
    point that strictly fools the whole pool; the incumbent perturbation warm
    starts every search.

    Args:
        mix: Mixture of LinearClassifier
        point: Point with label in {-1, +1}
        budget: Perturbation ball
        spec: Ordering, PGD stages and tolerances

    Returns:
        AttackOutcome whose fooled set is a maximal vulnerability region when
        the guaranteed parameters are used (``spec.pgd is None``)
    """
    if not mix.is_binary_linear:
        raise ContractViolation(f"lca_binary_linear needs linear classifiers, got kind '{mix.kind}'")
    check_dims(mix, point)
    delta = np.zeros(mix.input_dim)
    if fully_fooled_at_origin(mix, point):
        return build_outcome(mix, point, budget, delta, 0, AttackKind.LCA_BINARY_LINEAR.value)

    pool: List[int] = []
    iterations = 0
    trace = []
    for step, k in enumerate(classifier_order(mix, spec.ordering, spec.seed)):
        candidate = pool + [k]
        margins, margin_grads = linear_pool_margins(mix, point, candidate)
        result = find_intersection(
            margins,
            margin_grads,
            budget,
            spec.stages(len(candidate), budget),
            delta,
            seed=spec.seed + step,
            verify_tol=spec.verify_tol,
            target_slack=spec.target_slack,
            nudge=spec.nudge,
        )
        iterations += result.iterations
        if result.verified:
            pool = candidate
            delta = result.delta
        score = zero_one_loss_mixture(mix, point, delta)
        trace.append(TraceRecord(step, k, tuple(sorted(pool)), result.value, score, result.verified))
        logger.debug(
            f"step {step}: classifier {k} {'kept' if result.verified else 'dropped'}, "
            f"pool {sorted(pool)}, srh {result.value:.3g}, score {score:.4f}"
        )

    return build_outcome(mix, point, budget, delta, iterations, AttackKind.LCA_BINARY_LINEAR.value, trace)


def select_targets(mix: Mixture, x_adv: np.ndarray, y: int) -> Dict[int, int]:
    return {i: select_target(h, x_adv, y) for i, h in enumerate(mix.classifiers)}


def multiclass_pool_margins(
    mix: Mixture,
    point: LabeledPoint,
    pool: Sequence[int],
    targets: Dict[int, int],
    anchor: np.ndarray,
):
    """Logit margins of the pool against fixed target classes, scaled to unit slope at ``anchor``."""
    classifiers = [mix.classifiers[i] for i in pool]
    pairs = [targets[i] for i in pool]
    y = point.y

    # margins are scaled by their gradient norm at the anchor
    scale = np.ones(len(pool))
    for row, (h, t) in enumerate(zip(classifiers, pairs)):
        jac = h.jacobian(point.x + anchor)
        norm = float(np.linalg.norm(jac[y] - jac[t]))
        if norm > 0.0:
            scale[row] = norm

    def margins(delta: np.ndarray) -> np.ndarray:
        x_adv = point.x + delta
        values = np.empty(len(classifiers))
        for row, (h, t) in enumerate(zip(classifiers, pairs)):
            z = h.logits(x_adv)
            values[row] = z[y] - z[t]
        return values / scale

    def margin_grads(delta: np.ndarray) -> np.ndarray:
        x_adv = point.x + delta
        rows = []
        for h, t in zip(classifiers, pairs):
            jac = h.jacobian(x_adv)
            rows.append(jac[y] - jac[t])
        return np.stack(rows) / scale[:, None]

    return margins, margin_grads


def lca_multiclass(mix: Mixture, point: LabeledPoint, budget: AttackBudget, spec: AttackSpec) -> AttackOutcome:
    """Climb the lattice of a multi-class differentiable mixture.

    A candidate perturbation replaces the incumbent only when it strictly
    raises the mixture 0-1 loss; after every acceptance the pool becomes the
    exact fooled set and the target classes are re-selected.
    """
    if mix.is_binary_linear:
        raise ContractViolation("lca_multiclass needs differentiable multi-class classifiers")
    check_dims(mix, point)
    if not 0 <= point.y < mix.num_classes:
        raise ContractViolation(f"label {point.y} outside the class range [0, {mix.num_classes})")
    delta = np.zeros(mix.input_dim)
    if fully_fooled_at_origin(mix, point):
        return build_outcome(mix, point, budget, delta, 0, AttackKind.LCA_MULTICLASS.value)

    score = zero_one_loss_mixture(mix, point, delta)
    pool = sorted(fooled_set(mix, point, delta))
    targets = select_targets(mix, point.x + delta, point.y)
    iterations = 0
    trace = []
    for step, k in enumerate(classifier_order(mix, spec.ordering, spec.seed)):
        if k in pool:
            continue
        candidate = pool + [k]
        margins, margin_grads = multiclass_pool_margins(mix, point, candidate, targets, delta)
        result = find_intersection(
            margins,
            margin_grads,
            budget,
            spec.stages(len(candidate), budget),
            delta,
            seed=spec.seed + step,
            verify_tol=spec.verify_tol,
            target_slack=spec.target_slack,
            nudge=spec.nudge,
        )
        iterations += result.iterations
        candidate_score = zero_one_loss_mixture(mix, point, result.delta)
        accepted = candidate_score > score
        if accepted:
            delta = result.delta
            score = candidate_score
            pool = sorted(fooled_set(mix, point, delta))
            targets = select_targets(mix, point.x + delta, point.y)
        trace.append(TraceRecord(step, k, tuple(pool), result.value, score, accepted))
        logger.debug(
            f"step {step}: classifier {k} {'accepted' if accepted else 'rejected'} "
            f"(candidate score {candidate_score:.4f}), pool {pool}, score {score:.4f}"
        )

    return build_outcome(mix, point, budget, delta, iterations, AttackKind.LCA_MULTICLASS.value, trace)
