"""
End-to-end acceptance checks: maximality, optimality and effectiveness of the
attacks against the lattice oracle, the angle and random-mixture experiments,
and the multi-class bridge.

Each check runs at a reduced scale by default; the full-scale variants are
marked slow (run them with ``pytest -m slow``).
"""

import math

import numpy as np
import pytest

from latticeclimber.attacks import AttackKind, apgd, arc, default_spec, lca_binary_linear, lca_multiclass
from latticeclimber.core.config import Config
from latticeclimber.core.runner import ExperimentRunner, replay_trial
from latticeclimber.core.types import AttackBudget, LabeledPoint, Mixture
from latticeclimber.diff import (
    MlpClassifier,
    SoftmaxLinearClassifier,
    class_to_binary_label,
    input_gradient,
    raw_margin,
    reduce_to_binary,
)
from latticeclimber.oracle import Certificate, certify, enumerate_lattice, grid_membership, membership
from latticeclimber.synth import (
    canonical_configuration,
    critical_angle,
    make_angle_instance,
    sample_random_softmax_mixture,
)

from conftest import random_linear_instance, unit_distances

L2 = AttackBudget("l2", 1.0)


def scaled(default, full):
    values = full if isinstance(full, tuple) else (full,)
    return [default, pytest.param(*values, marks=pytest.mark.slow)]


def lattice_instances(count):
    """d in {2, 8}, m in 2..6, cycling through the four bias settings."""
    for i in range(count):
        d = (2, 8)[i % 2]
        m = 2 + (i // 2) % 5
        yield random_linear_instance(1000 + i, d=d, m=m, bias_setting=(i // 10) % 4)


def lca(mix, point, budget):
    return lca_binary_linear(mix, point, budget, default_spec(AttackKind.LCA_BINARY_LINEAR, budget))


@pytest.fixture
def runner(config_file):
    return ExperimentRunner(Config(str(config_file)), quiet=True, setup_logging=False)


@pytest.mark.parametrize("count", scaled(40, 200))
def test_lca_is_maximal(count):
    failures = []
    for index, (mix, point, budget) in enumerate(lattice_instances(count)):
        outcome = lca(mix, point, budget)
        certificate = certify(outcome, enumerate_lattice(mix, point, budget))
        if not (certificate.effective and certificate.maximal):
            failures.append((index, sorted(outcome.fooled)))
    assert failures == []


def test_lca_is_optimal_for_two_classifiers(canonical):
    _, mix, point, budget = canonical
    report = enumerate_lattice(mix, point, budget)
    assert lca(mix, point, budget).score == report.optimal_score


@pytest.mark.parametrize("count", scaled(100, 500))
def test_lca_and_arc_are_effective(count):
    checked = 0
    for i in range(count):
        mix, point, budget = random_linear_instance(2000 + i, d=8, m=2 + i % 5, bias_setting=i % 4)
        if not np.any(unit_distances(mix, point) < budget.epsilon - 1e-5):
            continue
        checked += 1
        assert lca(mix, point, budget).fooled, f"lca fooled nothing on instance {i}"
        assert arc(mix, point, budget, default_spec(AttackKind.ARC, budget)).fooled, f"arc fooled nothing on instance {i}"
    assert checked > 0


def test_angle_sweep_separation(runner):
    frame, metadata = runner.sweep_angle(r=0.9, epsilon=1.0, points=50, attacks=["lca", "arc"])
    theta_star = critical_angle(0.9, 1.0)
    assert metadata["critical_angle"] == pytest.approx(2 * math.acos(0.9))

    lca_scores = frame[frame["attack"] == "lca"]
    below = lca_scores[lca_scores["theta"] <= theta_star - 0.02]
    above = lca_scores[lca_scores["theta"] >= theta_star + 0.02]
    assert len(below) and len(above)
    assert (below["score"] == 1.0).all()
    assert np.allclose(above["score"], 0.5)
    assert metadata["transition_arc"] < metadata["transition_lca"]


@pytest.mark.parametrize("theta", [0.6, 0.7, 0.85])
def test_arc_misses_narrow_common_region(theta):
    mix, point = make_angle_instance(0.9, theta)
    report = enumerate_lattice(mix, point, L2)
    arc_outcome = arc(mix, point, L2, default_spec(AttackKind.ARC, L2))
    assert arc_outcome.score == pytest.approx(0.5)
    assert lca(mix, point, L2).score == pytest.approx(1.0)
    assert certify(arc_outcome, report) == Certificate(effective=True, maximal=False, optimal=False)


@pytest.mark.slow
def test_lca_dominates_arc_on_random_mixtures(runner):
    summary, _, metadata = runner.bench_random(m_grid=[1, 2, 4, 8, 16], trials=100, mu=0.5, sigma=0.5, d=256)
    assert metadata["epsilon"] == 4.0 and metadata["lca_stages"] == "guaranteed"
    means = summary.pivot(index="m", columns="attack", values="mean_score")
    assert (means["lca"] >= means["arc"] - 1e-12).all()
    assert metadata["gap_inversions"] <= 1
    assert metadata["sign_test_p"] < 0.05


def test_bench_is_reproducible(runner):
    kwargs = dict(m_grid=[1, 3], trials=2, attacks=["lca", "arc"], mu=0.5, sigma=0.5, d=32, epsilon=1.0, base_seed=5)
    _, first, _ = runner.bench_random(**kwargs)
    _, second, _ = runner.bench_random(**kwargs)
    assert first.equals(second)
    for row in first.to_dict("records"):
        assert replay_trial(row, runner.config) == row["score"]


@pytest.mark.parametrize("m_grid, trials", scaled(([1, 2, 4], 3), (list(range(1, 17)), 100)))
def test_tight_bias_setting_is_always_fully_fooled(runner, m_grid, trials):
    summary, _, _ = runner.bench_random(
        m_grid=m_grid, trials=trials, attacks=["lca"], mu=0.2, sigma=0.005, d=256, epsilon=1.0
    )
    assert summary["mean_score"].tolist() == pytest.approx([1.0] * len(m_grid))


def test_apgd_failure_mode():
    mix, point, budget = canonical_configuration("c", weights=(0.5, 0.5))
    apgd_scores = [apgd(mix, point, budget, default_spec(AttackKind.APGD, budget, seed=s)).score for s in range(20)]
    assert np.mean(apgd_scores) == 0.0
    assert lca(mix, point, budget).score == pytest.approx(0.5)
    assert arc(mix, point, budget, default_spec(AttackKind.ARC, budget)).score == pytest.approx(0.5)


def _softmax(rng, d, k):
    return SoftmaxLinearClassifier(weight=rng.standard_normal((k, d)), bias=rng.standard_normal(k))


def _mlp(rng, d, k):
    return MlpClassifier(
        hidden_weight=rng.standard_normal((8, d)),
        hidden_bias=rng.standard_normal(8),
        output_weight=rng.standard_normal((k, 8)),
        output_bias=rng.standard_normal(k),
    )


def _central_difference(h, x, y, y_adv, step=1e-5):
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (raw_margin(h, x + e, y, y_adv) - raw_margin(h, x - e, y, y_adv)) / (2 * step)
    return grad


@pytest.mark.parametrize("make", [_softmax, _mlp], ids=["softmax", "mlp"])
def test_input_gradients_match_finite_differences(make):
    rng = np.random.default_rng(8)
    d, k = 5, 4
    h = make(rng, d, k)
    checked = 0
    for _ in range(1000):
        if rng.uniform() < 0.1:
            h = make(rng, d, k)
        x = rng.standard_normal(d)
        y, y_adv = (int(c) for c in rng.choice(k, size=2, replace=False))
        margin = raw_margin(h, x, y, y_adv)
        if abs(margin) <= 1e-4:
            continue
        analytic = input_gradient(h, x, y, y_adv)
        if margin < 0:
            assert not np.any(analytic)
            continue
        checked += 1
        numeric = _central_difference(h, x, y, y_adv)
        assert np.linalg.norm(analytic - numeric) <= 1e-5 * max(1.0, np.linalg.norm(numeric))
    assert checked > 100


@pytest.mark.parametrize("count", scaled(40, 200))
def test_lattices_are_downward_closed(count):
    violations = 0
    for mix, point, budget in lattice_instances(count):
        report = enumerate_lattice(mix, point, budget)
        for subset in report.feasible_sets:
            violations += sum(1 for i in subset if not report.is_feasible(subset - {i}))
    assert violations == 0


@pytest.mark.parametrize("count", scaled(20, 100))
def test_membership_agrees_with_grid_search(count):
    for i in range(count):
        mix, point, budget = random_linear_instance(3000 + i, d=2, m=3, bias_setting=i % 4)
        for subset in ([0], [1], [2], [0, 1], [0, 2], [1, 2], [0, 1, 2]):
            found = membership(subset, mix, point, budget).feasible
            on_grid = grid_membership(subset, mix, point, budget, resolution=0.01) is not None
            if on_grid:
                assert found, f"instance {i}: grid found a point of {subset}, the finder did not"
            elif found:
                # region thinner than the coarse grid: settle it at the fine resolution
                assert grid_membership(subset, mix, point, budget) is not None, f"instance {i}: {subset}"


def _reduced(mix, point):
    binary = Mixture(classifiers=tuple(reduce_to_binary(h) for h in mix.classifiers), weights=mix.weights)
    return binary, LabeledPoint(x=point.x, y=class_to_binary_label(point.y))


def _bridge_pair(seed, m):
    mix, point = sample_random_softmax_mixture(d=4, k=2, m=m, seed=seed)
    binary, binary_point = _reduced(mix, point)
    multi = lca_multiclass(mix, point, L2, default_spec(AttackKind.LCA_MULTICLASS, L2))
    return multi, lca(binary, binary_point, L2), (binary, binary_point)


def _absorbed(outcome):
    """True when some acceptance pulled in classifiers besides the one being visited."""
    previous = set()
    for record in outcome.trace:
        if record.accepted:
            if set(record.pool) != previous | {record.classifier}:
                return True
            previous = set(record.pool)
    return False


def test_multiclass_bridge_on_pairs():
    mismatches = []
    for i in range(50):
        multi, reference, _ = _bridge_pair(4000 + i, 2)
        if multi.fooled != reference.fooled:
            mismatches.append((i, sorted(multi.fooled), sorted(reference.fooled)))
    assert mismatches == []


def test_side_effect_absorption_picks_another_maximal_region():
    multi, reference, (binary, binary_point) = _bridge_pair(5053, 4)
    report = enumerate_lattice(binary, binary_point, L2)
    assert _absorbed(multi)
    assert multi.fooled in report.maximal_regions
    assert reference.fooled in report.maximal_regions


@pytest.mark.slow
def test_multiclass_bridge():
    failures = []
    for i in range(200):
        m = 2 + i % 3
        multi, reference, (binary, binary_point) = _bridge_pair(5000 + i, m)
        report = enumerate_lattice(binary, binary_point, L2)
        if m == 2 and multi.fooled != reference.fooled:
            failures.append((i, "pair", sorted(multi.fooled), sorted(reference.fooled)))
        if report.maximal_regions and multi.fooled not in report.maximal_regions:
            failures.append((i, "not maximal", sorted(multi.fooled)))
        if not _absorbed(multi) and multi.score < reference.score - 1e-12:
            failures.append((i, "lower score", multi.score, reference.score))
    assert failures == []
