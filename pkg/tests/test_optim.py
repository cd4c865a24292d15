"""
Tests for the projected gradient descent engine and the intersection finder.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from latticeclimber.attacks.lca import linear_pool_margins
from latticeclimber.core.errors import ContractViolation, NumericalError
from latticeclimber.core.types import AttackBudget
from latticeclimber.optim import (
    PgdConfig,
    StepRule,
    default_stages,
    find_intersection,
    hinge_objective,
    lemma1_params,
    pgd_minimize,
    refine_params,
)

L2 = AttackBudget("l2", 1.0)


def quadratic(center):
    center = np.asarray(center, dtype=float)

    def objective(delta):
        return float(np.sum((delta - center) ** 2))

    def grad(delta):
        return 2.0 * (delta - center)

    return objective, grad


class TestPgdConfig:
    def test_polyak_rejects_momentum(self):
        with pytest.raises(ContractViolation):
            PgdConfig(steps=10, step_size=1.0, step_rule=StepRule.POLYAK, momentum=0.5)

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"steps": 0, "step_size": 0.1},
            {"steps": 10, "step_size": 0.0},
            {"steps": 10, "step_size": 0.1, "momentum": 1.0},
            {"steps": 10, "step_size": 0.1, "restarts": -1},
            {"steps": 10, "step_size": 0.1, "halve_at": 0.0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ContractViolation):
            PgdConfig(**kwargs)

    def test_step_rule_must_match_norm(self):
        with pytest.raises(ContractViolation):
            PgdConfig(steps=5, step_size=0.1, step_rule="sign_linf").check_budget(L2)
        with pytest.raises(ContractViolation):
            PgdConfig(steps=5, step_size=0.1, step_rule="normalized_l2").check_budget(AttackBudget("linf", 1.0))

    def test_halving_schedule(self):
        cfg = PgdConfig(steps=100, step_size=0.2, halve_at=0.9)
        assert cfg.step_size_at(89) == pytest.approx(0.2)
        assert cfg.step_size_at(90) == pytest.approx(0.1)

    def test_parse_step_rule(self):
        assert StepRule.parse("Normalized-L2") is StepRule.NORMALIZED_L2
        with pytest.raises(ContractViolation):
            StepRule.parse("adam")


class TestParameters:
    @pytest.mark.parametrize("m, eps, steps", [(1, 1.0, 2), (2, 1.0, 5), (2, 0.8, 4), (16, 1.0, 257)])
    def test_lemma1_params(self, m, eps, steps):
        cfg = lemma1_params(m, AttackBudget("l2", eps))
        assert cfg.steps == steps
        assert cfg.step_size == pytest.approx(eps / math.sqrt(steps))
        assert cfg.step_rule is StepRule.VANILLA
        # eps / sqrt(T) < 1 / m
        assert cfg.step_size < 1.0 / m

    def test_lemma1_needs_a_pool(self):
        with pytest.raises(ContractViolation):
            lemma1_params(0, L2)

    def test_refine_params(self):
        cfg = refine_params(50)
        assert cfg.step_rule is StepRule.POLYAK and cfg.steps == 50 and cfg.step_size == 1.0

    def test_default_stages(self):
        assert len(default_stages(3, L2)) == 2
        assert len(default_stages(3, L2, refine=False)) == 1


class TestPgdMinimize:
    def test_converges_to_projection_of_minimizer(self):
        objective, grad = quadratic([2.0, 0.0])
        cfg = PgdConfig(steps=200, step_size=0.1)
        result = pgd_minimize(objective, grad, L2, cfg, np.zeros(2))
        assert_allclose(result.best_delta, [1.0, 0.0], atol=1e-6)
        assert result.best_value == pytest.approx(1.0)

    def test_iterates_stay_in_ball(self):
        objective, grad = quadratic([0.0, 5.0])
        seen = []

        def accept(delta):
            seen.append(delta.copy())
            return False

        cfg = PgdConfig(steps=30, step_size=0.3, step_rule=StepRule.NORMALIZED_L2, momentum=0.9, restarts=2, random_init=True)
        pgd_minimize(objective, grad, L2, cfg, np.zeros(2), seed=4, stop_at=None, accept=accept)
        assert seen and all(L2.contains(d) for d in seen)

    def test_init_outside_ball(self):
        objective, grad = quadratic([0.0, 0.0])
        with pytest.raises(ContractViolation):
            pgd_minimize(objective, grad, L2, PgdConfig(steps=5, step_size=0.1), np.array([2.0, 0.0]))

    def test_non_finite_objective(self):
        def objective(delta):
            return float("nan") if np.any(delta) else 1.0

        def grad(delta):
            return np.ones(2)

        with pytest.raises(NumericalError, match="restart 0"):
            pgd_minimize(objective, grad, L2, PgdConfig(steps=5, step_size=0.1), np.zeros(2))

    def test_stops_at_zero(self):
        def objective(delta):
            return max(0.5 - delta[0], 0.0)

        def grad(delta):
            return np.array([-1.0, 0.0]) if delta[0] < 0.5 else np.zeros(2)

        result = pgd_minimize(objective, grad, L2, PgdConfig(steps=100, step_size=0.1), np.zeros(2))
        assert result.best_value == 0.0
        assert result.iterations == 5

    def test_polyak_projects_onto_half_space(self):
        def objective(delta):
            return max(0.5 - delta[0], 0.0)

        def grad(delta):
            return np.array([-1.0, 0.0]) if delta[0] < 0.5 else np.zeros(2)

        result = pgd_minimize(objective, grad, L2, refine_params(10), np.zeros(2))
        assert result.iterations == 1
        assert_allclose(result.best_delta, [0.5, 0.0])

    def test_accept_returns_the_accepted_iterate(self):
        objective, grad = quadratic([0.0, 3.0])
        cfg = PgdConfig(steps=100, step_size=0.1, step_rule=StepRule.NORMALIZED_L2)
        result = pgd_minimize(objective, grad, L2, cfg, np.zeros(2), accept=lambda d: d[1] > 0.25)
        assert result.iterations == 3
        assert_allclose(result.best_delta, [0.0, 0.3])

    def test_restarts_are_deterministic(self):
        objective, grad = quadratic([0.3, -0.2])
        cfg = PgdConfig(steps=3, step_size=0.05, restarts=3, random_init=True)
        a = pgd_minimize(objective, grad, L2, cfg, np.zeros(2), seed=11, stop_at=None)
        b = pgd_minimize(objective, grad, L2, cfg, np.zeros(2), seed=11, stop_at=None)
        assert_allclose(a.best_delta, b.best_delta)
        assert a.iterations == b.iterations == 12


class TestFindIntersection:
    def test_common_region_is_found(self, config_d):
        mix, point, budget = config_d
        margins, grads = linear_pool_margins(mix, point, [0, 1])
        result = find_intersection(margins, grads, budget, default_stages(2, budget), np.zeros(2))
        assert result.verified
        assert np.all(margins(result.delta) < -1e-9)
        assert budget.contains(result.delta)
        assert result.value == 0.0

    def test_disjoint_regions_are_not_verified(self, config_c):
        mix, point, budget = config_c
        margins, grads = linear_pool_margins(mix, point, [0, 1])
        result = find_intersection(margins, grads, budget, default_stages(2, budget), np.zeros(2))
        assert not result.verified
        assert result.value > 0.0

    def test_verified_start_returns_immediately(self, config_d):
        mix, point, budget = config_d
        margins, grads = linear_pool_margins(mix, point, [0])
        result = find_intersection(margins, grads, budget, default_stages(1, budget), np.array([0.7, 0.0]))
        assert result.verified and result.iterations == 0

    def test_refinement_stage_finishes_a_short_first_stage(self):
        budget = AttackBudget("l2", 1.0)

        def margins(delta):
            return np.array([0.999 - delta[0]])

        def grads(delta):
            return np.array([[-1.0, 0.0]])

        short = PgdConfig(steps=1, step_size=0.01)
        plain = find_intersection(margins, grads, budget, [short], np.zeros(2))
        refined = find_intersection(margins, grads, budget, [short, refine_params(100)], np.zeros(2))
        assert not plain.verified
        assert refined.verified
        # the shifted stage aims target_slack past the boundary
        assert refined.delta[0] == pytest.approx(0.999 + 1e-6)

    def test_hinge_gradient_counts_active_terms_only(self):
        def margins(delta):
            return np.array([1.0, -1.0])

        def grads(delta):
            return np.array([[1.0, 0.0], [0.0, 1.0]])

        objective, grad = hinge_objective(margins, grads)
        assert objective(np.zeros(2)) == pytest.approx(0.5)
        assert_allclose(grad(np.zeros(2)), [0.5, 0.0])
