"""
Attack specifications, classifier orderings and defaults drawn from the configuration.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from ..core.config import Config
from ..core.errors import ContractViolation
from ..core.losses import fooled_set
from ..core.schema import instance_fingerprint
from ..core.types import AttackBudget, AttackOutcome, LabeledPoint, Mixture, TraceRecord
from ..optim.pgd import PgdConfig, default_stages


class AttackKind(Enum):
    LCA_BINARY_LINEAR = "lca-binary"
    LCA_MULTICLASS = "lca-multiclass"
    APGD = "apgd"
    ARC = "arc"


class Ordering(Enum):
    """Order in which the climbing attacks visit the classifiers."""
    DECREASING_WEIGHT = "decreasing"
    GIVEN_ORDER = "given"
    RANDOM = "random"

    @classmethod
    def parse(cls, name: str) -> "Ordering":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ContractViolation(f"unknown ordering '{name}' (expected decreasing, given or random)")


@dataclass(frozen=True)
class AttackSpec:
    """Everything an attack needs besides the instance.

    ``pgd=None`` selects the guaranteed per-pool parameters; ``refine`` appends
    the Polyak refinement stage to the intersection search.
    """

    kind: AttackKind
    pgd: Optional[PgdConfig] = None
    ordering: Ordering = Ordering.DECREASING_WEIGHT
    seed: int = 0
    refine: bool = True
    refine_steps: int = 2000
    target_slack: float = 1e-6
    verify_tol: float = 1e-9
    nudge: float = 1e-7
    slack: float = 1e-6

    def stages(self, pool_size: int, budget: AttackBudget) -> List[PgdConfig]:
        """PGD stages of the intersection search for a pool of the given size."""
        if self.pgd is None:
            return default_stages(pool_size, budget, self.refine, self.refine_steps)
        stages = [self.pgd]
        if self.refine:
            stages.extend(default_stages(pool_size, budget, True, self.refine_steps)[1:])
        return stages


def classifier_order(mix: Mixture, ordering: Ordering = Ordering.DECREASING_WEIGHT, seed: int = 0) -> List[int]:
    """Visiting order of the classifier indices; weight ties break by index."""
    if ordering is Ordering.DECREASING_WEIGHT:
        return sorted(range(mix.m), key=lambda i: (-mix.weights[i], i))
    if ordering is Ordering.RANDOM:
        return [int(i) for i in np.random.default_rng(seed).permutation(mix.m)]
    return list(range(mix.m))


def default_spec(kind: AttackKind, budget: AttackBudget, config: Optional[Config] = None, seed: int = 0) -> AttackSpec:
    """Attack spec with the configured hyperparameters for ``kind``."""
    config = config or Config()
    oracle = config.get_oracle_config()
    common = dict(
        seed=seed,
        refine_steps=int(oracle.get("refine_steps", 2000)),
        target_slack=float(oracle.get("target_slack", 1e-6)),
        verify_tol=float(oracle.get("verify_tol", 1e-9)),
        nudge=float(oracle.get("nudge", 1e-7)),
    )
    if kind is AttackKind.LCA_BINARY_LINEAR:
        return AttackSpec(kind=kind, pgd=None, **common)
    if kind is AttackKind.LCA_MULTICLASS:
        return AttackSpec(kind=kind, pgd=config.pgd_config("lca_multiclass", budget), **common)
    if kind is AttackKind.APGD:
        return AttackSpec(kind=kind, pgd=config.pgd_config("apgd", budget), refine=False, **common)
    slack = float(config.get_attack_config("arc").get("slack", 1e-6))
    return AttackSpec(kind=kind, pgd=None, refine=False, slack=slack, **common)


def build_outcome(
    mix: Mixture,
    point: LabeledPoint,
    budget: AttackBudget,
    delta: np.ndarray,
    iterations: int,
    attack: str,
    trace: Sequence[TraceRecord] = (),
) -> AttackOutcome:
    """Package a final perturbation, recomputing the fooled set and score from scratch."""
    assert budget.contains(delta), f"{attack} returned a perturbation outside the ball"
    fooled = fooled_set(mix, point, delta)
    return AttackOutcome(
        delta=delta,
        fooled=fooled,
        score=mix.weight_of(fooled),
        iterations_used=iterations,
        attack=attack,
        fingerprint=instance_fingerprint(mix, point, budget),
        trace=tuple(trace),
    )


def fully_fooled_at_origin(mix: Mixture, point: LabeledPoint) -> bool:
    """True when every classifier already misclassifies the clean point."""
    return len(fooled_set(mix, point, np.zeros(mix.input_dim))) == mix.m
