"""
Projected gradient descent engine shared by every attack.

Provides the step rules, momentum, restarts and the halving schedule, the
guaranteed parameterization for the averaged reverse hinge objective, and the
intersection finder that turns a set of margins into a strictly fooling point.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from ..core.errors import ContractViolation, NumericalError
from ..core.losses import project_to_ball, sample_in_ball
from ..core.types import AttackBudget, Norm

logger = logging.getLogger(__name__)

# objective values at or below this count as zero
ZERO_TOLERANCE = 1e-12


class StepRule(Enum):
    """How a (momentum-averaged) gradient becomes a step."""
    VANILLA = "vanilla"
    NORMALIZED_L2 = "normalized_l2"
    SIGN_LINF = "sign_linf"
    POLYAK = "polyak"

    @classmethod
    def parse(cls, name: str) -> "StepRule":
        key = str(name).strip().lower().replace("-", "_")
        for rule in cls:
            if rule.value == key or rule.name.lower() == key:
                return rule
        raise ContractViolation(f"unknown step rule '{name}'")

    @classmethod
    def for_norm(cls, norm: Norm) -> "StepRule":
        """Steepest-descent rule of the budget norm."""
        return cls.NORMALIZED_L2 if norm is Norm.L2 else cls.SIGN_LINF


@dataclass(frozen=True)
class PgdConfig:
    """Hyperparameters of one projected gradient descent run."""

    steps: int
    step_size: float
    step_rule: StepRule = StepRule.VANILLA
    momentum: float = 0.0
    restarts: int = 0
    random_init: bool = False
    halve_at: Optional[float] = None

    def __post_init__(self):
        rule = self.step_rule if isinstance(self.step_rule, StepRule) else StepRule.parse(self.step_rule)
        object.__setattr__(self, "step_rule", rule)
        if int(self.steps) < 1:
            raise ContractViolation(f"steps must be a positive integer, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        if not math.isfinite(self.step_size) or self.step_size <= 0.0:
            raise ContractViolation(f"step_size must be positive, got {self.step_size}")
        if not 0.0 <= self.momentum < 1.0:
            raise ContractViolation(f"momentum must lie in [0, 1), got {self.momentum}")
        if int(self.restarts) < 0:
            raise ContractViolation(f"restarts must be nonnegative, got {self.restarts}")
        object.__setattr__(self, "restarts", int(self.restarts))
        if self.halve_at is not None and not 0.0 < self.halve_at <= 1.0:
            raise ContractViolation(f"halve_at must lie in (0, 1], got {self.halve_at}")
        if rule is StepRule.POLYAK and self.momentum != 0.0:
            raise ContractViolation("the Polyak step rule does not take momentum")

    def check_budget(self, budget: AttackBudget) -> None:
        """Reject step rules that do not match the budget norm."""
        if self.step_rule is StepRule.SIGN_LINF and budget.norm is not Norm.LINF:
            raise ContractViolation("the sign step rule needs an Linf budget")
        if self.step_rule is StepRule.NORMALIZED_L2 and budget.norm is not Norm.L2:
            raise ContractViolation("the normalized L2 step rule needs an L2 budget")

    def step_size_at(self, t: int) -> float:
        if self.halve_at is not None and t >= math.floor(self.halve_at * self.steps):
            return 0.5 * self.step_size
        return self.step_size

    @property
    def total_runs(self) -> int:
        return 1 + self.restarts


class PgdResult(NamedTuple):
    best_delta: np.ndarray
    best_value: float
    iterations: int
    last_direction: Optional[np.ndarray]


def _finite_value(value: float, restart: int, iteration: int) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NumericalError(f"objective is not finite ({value}) at restart {restart}, iteration {iteration}")
    return value


def _step(cfg: PgdConfig, velocity: np.ndarray, value: float, eta: float) -> np.ndarray:
    if cfg.step_rule is StepRule.VANILLA:
        return eta * velocity
    if cfg.step_rule is StepRule.NORMALIZED_L2:
        norm = float(np.linalg.norm(velocity))
        return eta * velocity / norm if norm > 0.0 else np.zeros_like(velocity)
    if cfg.step_rule is StepRule.SIGN_LINF:
        return eta * np.sign(velocity)
    squared = float(velocity @ velocity)
    if squared == 0.0 or value <= 0.0:
        return np.zeros_like(velocity)
    return eta * (value / squared) * velocity


def pgd_minimize(
    objective: Callable[[np.ndarray], float],
    grad: Callable[[np.ndarray], np.ndarray],
    budget: AttackBudget,
    cfg: PgdConfig,
    init_delta: np.ndarray,
    seed: int = 0,
    stop_at: Optional[float] = ZERO_TOLERANCE,
    accept: Optional[Callable[[np.ndarray], bool]] = None,
) -> PgdResult:
    """Minimize ``objective`` over the budget ball by projected gradient descent.

    Args:
        objective: Scalar function of delta
        grad: Its (sub)gradient
        budget: Perturbation ball
        cfg: Step rule, schedule, momentum and restarts
        init_delta: Starting perturbation; restart 0 always starts here
        seed: Seed for the random restarts
        stop_at: Stop as soon as the best value is at or below this; None disables it
        accept: Stop as soon as an iterate satisfies this predicate and return that iterate

    Returns:
        PgdResult with the best perturbation over all restarts (strict improvement,
        so the earliest iterate wins ties), its value, the number of gradient steps
        taken and the unit direction of the last nonzero step.
    """
    cfg.check_budget(budget)
    init = np.array(init_delta, dtype=np.float64)
    if not budget.contains(init):
        raise ContractViolation("init_delta lies outside the budget ball")
    rng = np.random.default_rng(seed)

    best_delta = init.copy()
    best_value = _finite_value(objective(init), 0, 0)
    iterations = 0
    last_direction = None

    def finished(value: float, delta: np.ndarray) -> bool:
        if stop_at is not None and value <= stop_at:
            return True
        return accept is not None and accept(delta)

    if finished(best_value, best_delta):
        return PgdResult(best_delta, best_value, 0, None)

    for restart in range(cfg.total_runs):
        if restart > 0 and cfg.random_init:
            delta = sample_in_ball(budget, init.shape[0], rng)
        else:
            delta = init.copy()
        value = _finite_value(objective(delta), restart, 0)
        if restart > 0:
            logger.debug(f"restart {restart} starts at objective {value:.6g}")
            if value < best_value:
                best_delta, best_value = delta.copy(), value
            if finished(value, delta):
                return PgdResult(delta, value, iterations, last_direction)

        velocity = np.zeros_like(delta)
        for t in range(cfg.steps):
            gradient = np.asarray(grad(delta), dtype=np.float64)
            if not np.all(np.isfinite(gradient)):
                raise NumericalError(f"gradient is not finite at restart {restart}, iteration {t}")
            velocity = cfg.momentum * velocity + gradient
            step = _step(cfg, velocity, value, cfg.step_size_at(t))
            step_norm = float(np.linalg.norm(step))
            if step_norm == 0.0:
                break
            last_direction = -step / step_norm
            delta = project_to_ball(delta - step, budget)
            assert budget.contains(delta), f"iterate left the ball at restart {restart}, iteration {t}"
            iterations += 1
            value = _finite_value(objective(delta), restart, t + 1)
            if value < best_value:
                best_delta, best_value = delta.copy(), value
            if accept is not None and accept(delta):
                return PgdResult(delta.copy(), value, iterations, last_direction)
            if stop_at is not None and best_value <= stop_at:
                return PgdResult(best_delta, best_value, iterations, last_direction)

    logger.debug(f"pgd finished after {iterations} steps, best objective {best_value:.6g}")
    return PgdResult(best_delta, best_value, iterations, last_direction)


def lemma1_params(m: int, budget: AttackBudget) -> PgdConfig:
    """Vanilla PGD long enough to reach within eps/sqrt(T) < 1/m of the optimum.

    Assumes a 1-Lipschitz objective, which the averaged reverse hinge over
    unit-normal classifiers is.
    """
    if int(m) < 1:
        raise ContractViolation(f"m must be at least 1, got {m}")
    eps = budget.epsilon
    bound = round(eps * eps * m * m, 12)
    steps = math.ceil(bound) + 1
    return PgdConfig(steps=steps, step_size=eps / math.sqrt(steps), step_rule=StepRule.VANILLA)


def refine_params(steps: int = 2000) -> PgdConfig:
    """Polyak refinement stage: with step size 1 it projects onto a single violated half-space."""
    return PgdConfig(steps=steps, step_size=1.0, step_rule=StepRule.POLYAK)


class IntersectionResult(NamedTuple):
    delta: np.ndarray
    value: float
    verified: bool
    iterations: int


def hinge_objective(
    margins: Callable[[np.ndarray], np.ndarray],
    margin_grads: Callable[[np.ndarray], np.ndarray],
    shift: float = 0.0,
):
    """Averaged reverse hinge of ``margins + shift`` and its subgradient (zero on flat terms)."""

    def objective(delta: np.ndarray) -> float:
        return float(np.mean(np.maximum(margins(delta) + shift, 0.0)))

    def grad(delta: np.ndarray) -> np.ndarray:
        values = margins(delta) + shift
        active = values > 0.0
        grads = margin_grads(delta)
        if not np.any(active):
            return np.zeros(grads.shape[1])
        return grads[active].sum(axis=0) / values.shape[0]

    return objective, grad


def find_intersection(
    margins: Callable[[np.ndarray], np.ndarray],
    margin_grads: Callable[[np.ndarray], np.ndarray],
    budget: AttackBudget,
    stages: Sequence[PgdConfig],
    init_delta: np.ndarray,
    seed: int = 0,
    verify_tol: float = 1e-9,
    target_slack: float = 1e-6,
    nudge: float = 1e-7,
) -> IntersectionResult:
    """Search the ball for a point where every margin is strictly negative.

    Runs the stages in turn, each warm-started at the previous best point. The
    first stage minimizes the plain averaged reverse hinge; later stages shift
    the margins by ``target_slack`` so they aim past the boundary.

    Args:
        margins: delta -> vector of signed margins (fooled when < 0)
        margin_grads: delta -> matrix of margin gradients, one row per margin
        budget: Perturbation ball
        stages: PGD configurations to run in order
        init_delta: Warm start
        seed: Seed for stage restarts
        verify_tol: Margins must be below -verify_tol to count
        target_slack: Margin shift of the stages after the first
        nudge: Length of the final push off the boundary

    Returns:
        IntersectionResult with the best point, its unshifted objective value,
        whether all margins are verified strictly negative, and the step count.
    """

    def verified(delta: np.ndarray) -> bool:
        return bool(np.all(margins(delta) < -verify_tol))

    plain_objective, _ = hinge_objective(margins, margin_grads)
    delta = project_to_ball(np.asarray(init_delta, dtype=np.float64), budget)
    if verified(delta):
        return IntersectionResult(delta, plain_objective(delta), True, 0)

    iterations = 0
    direction = None
    for index, cfg in enumerate(stages):
        shift = 0.0 if index == 0 else target_slack
        objective, grad = hinge_objective(margins, margin_grads, shift)
        result = pgd_minimize(
            objective, grad, budget, cfg, delta,
            seed=seed + index, stop_at=None, accept=verified,
        )
        iterations += result.iterations
        delta = result.best_delta
        if result.last_direction is not None:
            direction = result.last_direction
        if verified(delta):
            return IntersectionResult(delta, plain_objective(delta), True, iterations)

    values = margins(delta)
    if direction is not None and np.all(values <= 0.0) and np.any(values > -verify_tol):
        candidate = project_to_ball(delta + nudge * direction, budget)
        if verified(candidate):
            logger.debug("boundary point nudged into the open region")
            delta = candidate

    return IntersectionResult(delta, plain_objective(delta), verified(delta), iterations)


def default_stages(pool_size: int, budget: AttackBudget, refine: bool = True, refine_steps: int = 2000) -> List[PgdConfig]:
    """Oracle-grade stages for a pool: the guaranteed run, then optionally the Polyak refinement."""
    stages = [lemma1_params(pool_size, budget)]
    if refine:
        stages.append(refine_params(refine_steps))
    return stages
