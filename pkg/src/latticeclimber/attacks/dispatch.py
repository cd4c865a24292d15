"""
Attack dispatcher: run any attack by name.
"""

import logging
import time
from typing import Optional

from ..core.config import Config
from ..core.errors import ContractViolation
from ..core.types import AttackBudget, AttackOutcome, LabeledPoint, Mixture
from .baselines import apgd, arc
from .lca import lca_binary_linear, lca_multiclass
from .spec import AttackKind, AttackSpec, default_spec

logger = logging.getLogger(__name__)

ATTACKS = {
    AttackKind.LCA_BINARY_LINEAR: lca_binary_linear,
    AttackKind.LCA_MULTICLASS: lca_multiclass,
    AttackKind.APGD: apgd,
    AttackKind.ARC: arc,
}


def resolve_kind(name: str, mix: Mixture) -> AttackKind:
    """Map an attack name to its kind; ``lca`` picks the variant matching the mixture."""
    key = str(name).strip().lower()
    if key == "lca":
        return AttackKind.LCA_BINARY_LINEAR if mix.is_binary_linear else AttackKind.LCA_MULTICLASS
    try:
        return AttackKind(key)
    except ValueError:
        raise ContractViolation(f"unknown attack '{name}' (expected lca, lca-binary, lca-multiclass, apgd or arc)")


def run_attack(
    name: str,
    mix: Mixture,
    point: LabeledPoint,
    budget: AttackBudget,
    spec: Optional[AttackSpec] = None,
    config: Optional[Config] = None,
    seed: int = 0,
) -> AttackOutcome:
    """Run the named attack, building its spec from the configuration when none is given."""
    kind = resolve_kind(name, mix)
    if spec is None:
        spec = default_spec(kind, budget, config, seed=seed)
    elif spec.kind is not kind:
        raise ContractViolation(f"spec is for {spec.kind.value}, attack requested is {kind.value}")

    started = time.perf_counter()
    outcome = ATTACKS[kind](mix, point, budget, spec)
    logger.debug(
        f"{kind.value}: score {outcome.score:.4f}, fooled {sorted(outcome.fooled)}, "
        f"{outcome.iterations_used} iterations in {time.perf_counter() - started:.3f}s"
    )
    return outcome
