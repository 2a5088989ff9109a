"""Ridge and minimax second-stage fitters."""

import numpy as np
import pytest

from twostage.solvers import (
    Coefficients,
    RankDeficiencyError,
    RegressionProblem,
    SolverBudgetError,
    evaluate_max_quadratic,
    fit_minimax,
    fit_ridge,
    mean_squared_objective,
)

from oracles import minimax_oracle, random_small_problem


def stationarity_residual(problem, beta):
    phi, t, lam = problem.features, problem.targets, problem.ridge
    grad = 2.0 / problem.n_rows * (phi.T @ (phi @ beta - t)) + 2.0 * lam * beta
    return float(np.linalg.norm(grad))


def stationarity_tol(problem):
    return 1e-8 * (1.0 + np.linalg.norm(problem.features.T @ problem.targets) / problem.n_rows)


def random_ridge_problem(rng):
    n_rows = int(rng.integers(1, 501))
    n_feat = int(rng.integers(1, 251))
    ridge = float(rng.choice([1e-8, 1e-4, 1e-1, 1.0]))
    if n_rows >= n_feat + 5 and rng.random() < 0.25:
        ridge = 0.0
    phi = rng.normal(size=(n_rows, n_feat))
    targets = rng.normal(size=n_rows)
    return RegressionProblem(phi, targets, ridge)


class TestProblemValidation:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            RegressionProblem([[np.inf]], [1.0], 0.0)

    def test_rejects_negative_ridge(self):
        with pytest.raises(ValueError):
            RegressionProblem([[1.0]], [1.0], -1e-9)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ValueError):
            RegressionProblem([[1.0, 2.0]], [1.0, 2.0], 0.0)


class TestFitRidge:
    def test_single_point_interpolation(self):
        fit = fit_ridge(RegressionProblem([[2.0]], [6.0], 0.0))
        assert fit.beta[0] == pytest.approx(3.0, rel=1e-14)
        assert fit.objective == pytest.approx(0.0, abs=1e-24)
        assert fit.certificate == 0.0

    def test_hand_solved_normal_equations(self):
        # Gram [[2,1],[1,2]], rhs (2,2) -> beta = (2/3, 2/3)
        fit = fit_ridge(
            RegressionProblem([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [1.0, 1.0, 1.0], 0.0)
        )
        np.testing.assert_allclose(fit.beta, [2.0 / 3.0, 2.0 / 3.0], rtol=1e-13)

    def test_huge_ridge_shrinks_to_zero(self):
        phi = np.array([[1.0, 2.0], [3.0, 4.0]])
        t = np.array([1.0, -2.0])
        lam = 1e12 * float(np.linalg.norm(phi)) ** 2
        fit = fit_ridge(RegressionProblem(phi, t, lam))
        bound = np.linalg.norm(phi.T @ t) / (phi.shape[0] * lam)
        assert np.linalg.norm(fit.beta) <= bound

    def test_rank_deficiency_raises(self):
        with pytest.raises(RankDeficiencyError):
            fit_ridge(RegressionProblem([[1.0, 2.0]], [1.0], 0.0))
        with pytest.raises(RankDeficiencyError):
            # duplicated column
            fit_ridge(
                RegressionProblem([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], [1.0, 2.0, 3.0], 0.0)
            )

    def test_stationarity_on_random_problems(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            problem = random_ridge_problem(rng)
            fit = fit_ridge(problem)
            assert stationarity_residual(problem, fit.beta) <= stationarity_tol(problem)

    def test_finite_difference_directional_derivatives(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            problem = RegressionProblem(
                rng.normal(size=(40, 8)), rng.normal(size=40), 1e-4
            )
            fit = fit_ridge(problem)
            h = 1e-5
            for _ in range(10):
                d = rng.normal(size=8)
                d /= np.linalg.norm(d)
                deriv = (
                    mean_squared_objective(fit.beta + h * d, problem)
                    - mean_squared_objective(fit.beta - h * d, problem)
                ) / (2 * h)
                assert abs(deriv) <= 1e-6

    def test_duplicated_rows_leave_fit_unchanged(self):
        rng = np.random.default_rng(3)
        phi = rng.normal(size=(30, 6))
        t = rng.normal(size=30)
        lam = 1e-6
        single = fit_ridge(RegressionProblem(phi, t, lam))
        doubled = fit_ridge(
            RegressionProblem(np.vstack([phi, phi]), np.concatenate([t, t]), lam)
        )
        np.testing.assert_allclose(single.beta, doubled.beta, rtol=1e-10, atol=1e-12)


class TestEvaluateMaxQuadratic:
    def test_zero_beta_gives_largest_target(self):
        problem = RegressionProblem([[1.0], [1.0], [1.0]], [1.0, -3.0, 2.0], 0.0)
        value, idx = evaluate_max_quadratic(np.zeros(1), problem)
        assert value == 9.0
        assert idx == 1

    def test_single_row(self):
        problem = RegressionProblem([[2.0]], [5.0], 0.5)
        value, idx = evaluate_max_quadratic(np.array([1.0]), problem)
        assert value == pytest.approx((5.0 - 2.0) ** 2 + 0.5)
        assert idx == 0

    def test_tie_breaks_to_smallest_index(self):
        problem = RegressionProblem([[1.0], [1.0]], [2.0, -2.0], 0.0)
        _, idx = evaluate_max_quadratic(np.zeros(1), problem)
        assert idx == 0

    def test_equalized_instance_both_rows_active(self):
        problem = RegressionProblem([[1.0], [2.0]], [0.0, 2.0], 0.0)
        beta = np.array([2.0 / 3.0])
        value, _ = evaluate_max_quadratic(beta, problem)
        r = problem.targets - problem.features @ beta
        assert value == pytest.approx(4.0 / 9.0, rel=1e-12)
        assert np.all(np.abs(r * r - value) <= 1e-9)


class TestFitMinimax:
    def test_single_row_matches_ridge(self):
        # max over one index equals the mean over one index
        problem = RegressionProblem([[2.0]], [6.0], 0.0)
        mm = fit_minimax(problem)
        assert mm.beta[0] == pytest.approx(3.0, rel=1e-12)
        assert mm.objective == pytest.approx(0.0, abs=1e-20)
        problem2 = RegressionProblem([[1.0, 2.0]], [4.0], 0.5)
        mm2 = fit_minimax(problem2)
        rr = fit_ridge(problem2)
        np.testing.assert_allclose(mm2.beta, rr.beta, rtol=1e-8, atol=1e-10)
        assert mm2.objective == pytest.approx(rr.objective, rel=1e-8)

    def test_symmetric_pair_equalizes(self):
        problem = RegressionProblem([[1.0], [1.0]], [0.0, 2.0], 0.0)
        mm = fit_minimax(problem)
        assert mm.beta[0] == pytest.approx(1.0, abs=1e-9)
        assert mm.objective == pytest.approx(1.0, rel=1e-9)

    def test_symmetric_targets_predict_midpoint(self):
        # identical features, targets theta +/- d -> prediction is theta
        phi = np.array([[1.0, 2.0], [1.0, 2.0]])
        problem = RegressionProblem(phi, [3.0 + 0.5, 3.0 - 0.5], 1e-10)
        mm = fit_minimax(problem)
        assert phi[0] @ mm.beta == pytest.approx(3.0, abs=1e-6)

    def test_two_point_hand_instance_with_grid_oracle(self):
        problem = RegressionProblem([[1.0], [2.0]], [0.0, 2.0], 0.0)
        mm = fit_minimax(problem)
        assert mm.beta[0] == pytest.approx(2.0 / 3.0, abs=1e-7)
        assert mm.objective == pytest.approx(4.0 / 9.0, rel=1e-9)
        grid = np.linspace(-1.0, 2.0, 300001)  # step 1e-5
        r0 = 0.0 - grid
        r1 = 2.0 - 2.0 * grid
        dense_min = float(np.minimum.reduce([np.maximum(r0 * r0, r1 * r1)]).min())
        assert mm.objective <= dense_min + 1e-9

    def test_rejects_non_positive_tolerance(self):
        problem = RegressionProblem([[1.0]], [1.0], 0.0)
        with pytest.raises(ValueError):
            fit_minimax(problem, tolerance=0.0)

    def test_budget_error_carries_best_iterate(self):
        rng = np.random.default_rng(5)
        problem = RegressionProblem(rng.normal(size=(12, 2)), rng.normal(size=12), 1e-8)
        with pytest.raises(SolverBudgetError) as err:
            fit_minimax(problem, tolerance=1e-300)
        coeff = err.value.coefficients
        assert isinstance(coeff, Coefficients)
        assert coeff.certificate > 1e-300
        value, _ = evaluate_max_quadratic(coeff.beta, problem)
        assert value == pytest.approx(coeff.objective)

    def test_oracle_agreement_small_instances(self):
        rng = np.random.default_rng(314)
        for _ in range(15):
            problem = random_small_problem(rng)
            fit = fit_minimax(problem)
            oracle = minimax_oracle(problem, fit.beta)
            rel = abs(fit.objective - oracle) / max(abs(oracle), 1e-12)
            assert rel <= 1e-3
            assert oracle >= fit.objective - fit.certificate - 1e-9 * (1 + abs(oracle))

    def test_dominates_ridge_under_worst_row(self):
        rng = np.random.default_rng(99)
        for _ in range(10):
            n_rows = int(rng.integers(2, 40))
            n_feat = int(rng.integers(1, 6))
            problem = RegressionProblem(
                rng.normal(size=(n_rows, n_feat)), rng.normal(size=n_rows), 1e-8
            )
            mm = fit_minimax(problem)
            rr = fit_ridge(problem)
            worst_ridge, _ = evaluate_max_quadratic(rr.beta, problem)
            assert mm.objective <= worst_ridge + 1e-6

    def test_objective_monotone_in_ridge(self):
        rng = np.random.default_rng(17)
        phi = rng.normal(size=(20, 3))
        t = rng.normal(size=20)
        values = [
            fit_minimax(RegressionProblem(phi, t, lam)).objective
            for lam in (0.0, 1e-8, 1e-4)
        ]
        assert values[0] <= values[1] + 1e-9
        assert values[1] <= values[2] + 1e-9

    def test_certificate_reported_below_tolerance(self):
        rng = np.random.default_rng(23)
        problem = RegressionProblem(rng.normal(size=(30, 4)), rng.normal(size=30), 1e-6)
        fit = fit_minimax(problem, tolerance=1e-9)
        assert 0.0 <= fit.certificate <= 1e-9

    def test_duplicated_rows_degenerate_working_sets(self):
        # repeated rows force singular active-set systems; the exchange must
        # shed them and still certify the same optimum as the deduplicated fit
        rng = np.random.default_rng(8)
        base_phi = rng.normal(size=(3, 2))
        base_t = rng.normal(size=3) * 3
        dup = fit_minimax(
            RegressionProblem(np.repeat(base_phi, 10, axis=0), np.repeat(base_t, 10), 1e-8)
        )
        dedup = fit_minimax(RegressionProblem(base_phi, base_t, 1e-8))
        assert dup.objective == pytest.approx(dedup.objective, rel=1e-9)
        assert dup.certificate <= 1e-6 * dup.objective
