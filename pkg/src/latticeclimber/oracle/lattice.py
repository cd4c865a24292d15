"""
Vulnerability lattice oracle.

Tests membership of index sets in the adversarial semi-lattice, enumerates the
lattice level by level with Apriori pruning, and certifies attack outcomes
against the result. Exhaustive, so only meant for small mixtures.
"""

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from typing import Any, Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np

from ..attacks.lca import linear_pool_margins, multiclass_pool_margins, select_targets
from ..core.config import Config
from ..core.errors import ContractViolation, InstanceFormatError, LatticeSizeError
from ..core.losses import check_dims, stack_linear
from ..core.schema import instance_fingerprint
from ..core.types import AttackBudget, AttackOutcome, LabeledPoint, Mixture, Norm, as_index_set
from ..optim.pgd import default_stages, find_intersection

logger = logging.getLogger(__name__)

SCORE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class OracleSettings:
    max_m: int = 16
    refine_steps: int = 2000
    target_slack: float = 1e-6
    verify_tol: float = 1e-9
    nudge: float = 1e-7
    grid_resolution_ratio: float = 1e-3
    cross_check: bool = False
    workers: int = 1

    @classmethod
    def from_config(cls, config: Optional[Config] = None) -> "OracleSettings":
        section = (config or Config()).get_oracle_config()
        known = {k: section[k] for k in cls.__dataclass_fields__ if k in section}
        return cls(**known)


@dataclass(frozen=True, eq=False)
class RegionStatus:
    """Feasibility of V(I); the witness is a point x + delta strictly inside it."""

    indices: FrozenSet[int]
    feasible: bool
    witness: Optional[np.ndarray] = None
    tested: bool = True
    cross_checked: Optional[bool] = None
    best_effort: bool = False

    def __post_init__(self):
        if self.feasible != (self.witness is not None):
            raise ContractViolation("a region is feasible exactly when it has a witness")


@dataclass(frozen=True, eq=False)
class LatticeReport:
    statuses: Dict[FrozenSet[int], RegionStatus]
    maximal_regions: List[FrozenSet[int]]
    optimal_score: float
    optimal_witness: np.ndarray
    fingerprint: str = ""
    best_effort: bool = False

    @property
    def m(self) -> int:
        return max(len(s) for s in self.statuses)

    @property
    def feasible_sets(self) -> List[FrozenSet[int]]:
        return [s for s, status in self.statuses.items() if status.feasible]

    def is_feasible(self, indices: Iterable[int]) -> bool:
        return self.statuses[as_index_set(indices)].feasible


@dataclass(frozen=True)
class Certificate:
    """Properties of an attack outcome; None means not certified."""

    effective: bool
    maximal: Optional[bool]
    optimal: Optional[bool]


def _subset_order(s: FrozenSet[int]):
    return (len(s), tuple(sorted(s)))


def _pool_functions(mix: Mixture, point: LabeledPoint, pool: List[int]):
    if mix.is_binary_linear:
        return linear_pool_margins(mix, point, pool)
    targets = select_targets(mix, point.x, point.y)
    return multiclass_pool_margins(mix, point, pool, targets, np.zeros(mix.input_dim))


def membership(
    indices: Iterable[int],
    mix: Mixture,
    point: LabeledPoint,
    budget: AttackBudget,
    settings: Optional[OracleSettings] = None,
    starts: Sequence[np.ndarray] = (),
    seed: int = 0,
) -> RegionStatus:
    """Decide whether V(indices) is nonempty.

    Runs the intersection finder from delta = 0 and then from each extra
    starting perturbation until one verifies strictly negative margins.

    Args:
        indices: Index set I
        mix: Mixture (oracle-grade for binary linear, best effort otherwise)
        point: Labeled point
        budget: Perturbation ball
        settings: Finder tolerances and grid cross-check switch
        starts: Additional starting perturbations, e.g. witnesses of subsets minus x
        seed: Seed for the finder

    Returns:
        RegionStatus with a witness point x + delta when feasible
    """
    settings = settings or OracleSettings()
    subset = as_index_set(indices)
    check_dims(mix, point)
    best_effort = not mix.is_binary_linear
    if not subset:
        return RegionStatus(subset, True, np.array(point.x), best_effort=best_effort)
    if max(subset) >= mix.m or min(subset) < 0:
        raise ContractViolation(f"index set {sorted(subset)} outside [0, {mix.m})")

    pool = sorted(subset)
    margins, margin_grads = _pool_functions(mix, point, pool)
    stages = default_stages(len(pool), budget, True, settings.refine_steps)
    witness = None
    for attempt, start in enumerate([np.zeros(mix.input_dim)] + [np.asarray(s) for s in starts]):
        result = find_intersection(
            margins,
            margin_grads,
            budget,
            stages,
            start,
            seed=seed + attempt,
            verify_tol=settings.verify_tol,
            target_slack=settings.target_slack,
            nudge=settings.nudge,
        )
        if result.verified:
            witness = point.x + result.delta
            break

    cross_checked = None
    if settings.cross_check and mix.input_dim <= 2 and mix.is_binary_linear:
        resolution = settings.grid_resolution_ratio * budget.epsilon
        cross_checked = grid_membership(pool, mix, point, budget, resolution, settings.verify_tol) is not None
        if cross_checked != (witness is not None):
            logger.warning(f"grid search disagrees on {pool}: pgd={witness is not None}, grid={cross_checked}")

    return RegionStatus(subset, witness is not None, witness, True, cross_checked, best_effort)


def grid_membership(
    indices: Iterable[int],
    mix: Mixture,
    point: LabeledPoint,
    budget: AttackBudget,
    resolution: Optional[float] = None,
    verify_tol: float = 1e-9,
    chunk_rows: int = 256,
) -> Optional[np.ndarray]:
    """Dense grid search of V(indices) for d <= 2; returns a witness point or None."""
    if mix.input_dim > 2:
        raise ContractViolation(f"grid search needs d <= 2, got d={mix.input_dim}")
    pool = sorted(as_index_set(indices))
    if not pool:
        return np.array(point.x)
    eps = budget.epsilon
    resolution = resolution or 1e-3 * eps
    thetas, biases = stack_linear(mix, pool, unit=True)
    axis = np.linspace(-eps, eps, int(round(2 * eps / resolution)) + 1)

    if mix.input_dim == 1:
        rows = [axis[:, None]]
    else:
        rows = (
            np.stack(np.meshgrid(axis[i:i + chunk_rows], axis, indexing="ij"), axis=-1).reshape(-1, 2)
            for i in range(0, axis.size, chunk_rows)
        )
    for deltas in rows:
        if budget.norm is Norm.L2:
            deltas = deltas[np.linalg.norm(deltas, axis=1) <= eps]
        margins = point.y * ((point.x + deltas) @ thetas.T + biases)
        inside = np.all(margins < -verify_tol, axis=1)
        if np.any(inside):
            return point.x + deltas[int(np.argmax(inside))]
    return None


def _contains_all_subsets(candidate: FrozenSet[int], feasible: set) -> bool:
    for item in candidate:
        if candidate - {item} not in feasible:
            return False
    return True


def enumerate_lattice(
    mix: Mixture,
    point: LabeledPoint,
    budget: AttackBudget,
    max_m: Optional[int] = None,
    settings: Optional[OracleSettings] = None,
) -> LatticeReport:
    """Enumerate every feasible index set, level by level with Apriori pruning.

    Supersets of an infeasible set are never tested; they are recorded as
    infeasible with ``tested=False``.

    Args:
        mix: Mixture with m <= max_m
        point: Labeled point
        budget: Perturbation ball
        max_m: Size cap, defaults to the configured one
        settings: Oracle settings

    Returns:
        LatticeReport with all 2^m statuses, the maximal regions and the optimum

    Raises:
        LatticeSizeError: m above the cap
    """
    settings = settings or OracleSettings()
    max_m = settings.max_m if max_m is None else int(max_m)
    if mix.m > max_m:
        raise LatticeSizeError(mix.m, max_m)
    check_dims(mix, point)
    best_effort = not mix.is_binary_linear
    if best_effort:
        logger.warning(f"lattice of a '{mix.kind}' mixture is best effort: membership is not exact")

    memo: Dict[FrozenSet[int], RegionStatus] = {}
    lock = threading.Lock()

    def test(subset: FrozenSet[int]) -> RegionStatus:
        with lock:
            if subset in memo:
                return memo[subset]
            starts = [
                memo[subset - {i}].witness - point.x
                for i in sorted(subset)
                if subset - {i} in memo and memo[subset - {i}].feasible and len(subset) > 1
            ]
        status = membership(subset, mix, point, budget, settings, starts, seed=len(subset))
        with lock:
            memo[subset] = status
        return status

    empty = frozenset()
    memo[empty] = membership(empty, mix, point, budget, settings)
    level = [frozenset({i}) for i in range(mix.m)]
    size = 1
    with ThreadPoolExecutor(max_workers=max(1, settings.workers)) as pool:
        while level:
            statuses = list(pool.map(test, sorted(level, key=_subset_order)))
            feasible = {s.indices for s in statuses if s.feasible}
            logger.debug(f"level {size}: {len(feasible)} of {len(level)} candidate sets feasible")
            generation = set()
            for a, b in product(feasible, repeat=2):
                union = a | b
                if len(a - b) == 1 and union not in generation and _contains_all_subsets(union, feasible):
                    generation.add(union)
            level = list(generation)
            size += 1

    statuses: Dict[FrozenSet[int], RegionStatus] = {}
    for k in range(mix.m + 1):
        for combo in combinations(range(mix.m), k):
            subset = frozenset(combo)
            statuses[subset] = memo.get(subset) or RegionStatus(subset, False, tested=False, best_effort=best_effort)

    feasible_sets = sorted((s for s in memo if memo[s].feasible), key=_subset_order)
    maximal = [
        s for s in feasible_sets
        if s and not any(statuses[s | {j}].feasible for j in range(mix.m) if j not in s)
    ]
    optimal_set = max(feasible_sets, key=lambda s: mix.weight_of(s))
    report = LatticeReport(
        statuses=statuses,
        maximal_regions=maximal,
        optimal_score=mix.weight_of(optimal_set),
        optimal_witness=np.array(memo[optimal_set].witness),
        fingerprint=instance_fingerprint(mix, point, budget),
        best_effort=best_effort,
    )
    logger.info(
        f"lattice of m={mix.m}: {len(feasible_sets) - 1} feasible nonempty sets, "
        f"{len(maximal)} maximal, optimum {report.optimal_score:.4f}"
    )
    return report


def certify(outcome: AttackOutcome, report: LatticeReport) -> Certificate:
    """Check effectiveness, maximality and optimality of an outcome against the lattice."""
    if outcome.fingerprint != report.fingerprint:
        raise ContractViolation("outcome and lattice report describe different instances")
    attackable = bool(report.maximal_regions)
    effective = not attackable or bool(outcome.fooled)
    if report.best_effort:
        return Certificate(effective=effective, maximal=None, optimal=None)
    maximal = not attackable or outcome.fooled in report.maximal_regions
    optimal = abs(outcome.score - report.optimal_score) <= SCORE_TOLERANCE
    return Certificate(effective=effective, maximal=maximal, optimal=optimal)


def _optional_vector(values) -> Optional[list]:
    return None if values is None else [float(v) for v in values]


def report_to_dict(report: LatticeReport) -> Dict[str, Any]:
    """Encode a report; pruned (untested) subsets are implied and not written."""
    return {
        "version": "1.0",
        "fingerprint": report.fingerprint,
        "best_effort": report.best_effort,
        "m": report.m,
        "optimal_score": float(report.optimal_score),
        "optimal_witness": _optional_vector(report.optimal_witness),
        "maximal_regions": [sorted(s) for s in report.maximal_regions],
        "statuses": [
            {
                "indices": sorted(s),
                "feasible": status.feasible,
                "witness": _optional_vector(status.witness),
                "cross_checked": status.cross_checked,
            }
            for s, status in sorted(report.statuses.items(), key=lambda kv: _subset_order(kv[0]))
            if status.tested
        ],
    }


def report_from_dict(data: Dict[str, Any]) -> LatticeReport:
    try:
        m = int(data["m"])
        best_effort = bool(data.get("best_effort", False))
        tested = {}
        for entry in data["statuses"]:
            subset = frozenset(int(i) for i in entry["indices"])
            witness = None if entry["witness"] is None else np.array(entry["witness"], dtype=np.float64)
            tested[subset] = RegionStatus(
                subset, bool(entry["feasible"]), witness, True, entry.get("cross_checked"), best_effort
            )
        statuses = {}
        for k in range(m + 1):
            for combo in combinations(range(m), k):
                subset = frozenset(combo)
                statuses[subset] = tested.get(subset) or RegionStatus(subset, False, tested=False, best_effort=best_effort)
        return LatticeReport(
            statuses=statuses,
            maximal_regions=[frozenset(s) for s in data["maximal_regions"]],
            optimal_score=float(data["optimal_score"]),
            optimal_witness=np.array(data["optimal_witness"], dtype=np.float64),
            fingerprint=str(data.get("fingerprint", "")),
            best_effort=best_effort,
        )
    except (KeyError, TypeError, ValueError, ContractViolation) as e:
        raise InstanceFormatError(f"invalid lattice report: {e}") from e
