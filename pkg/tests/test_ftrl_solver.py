"""
Tests for the FTRL subproblem solver: interior Newton, the boundary active
set and warm-start behavior
"""

import math

import numpy as np
import pytest

from bandit.barrier import BallBarrier, ConeBarrier
from bandit.errors import ConvergenceError, InvalidArgumentError
from bandit.ftrl_solver import GRADIENT_TOLERANCE, MAX_ITERATIONS, FtrlObjective, minimize, minimize_barrier
from bandit.geometry import BallActionSet, LiftedPoint


def quadratic_root(gamma: float, c: float = 400.0) -> float:
    """Root in (-1, 1) of gamma x^2 - 2 c x - gamma = 0, the 1-D optimality condition with D = 1"""
    return -2.0 * gamma / (2.0 * c + math.sqrt(4.0 * c * c + 4.0 * gamma * gamma))


def solution_tolerance(objective: FtrlObjective, expected: np.ndarray) -> float:
    """Distance to the minimizer implied by the gradient stopping rule: residual tolerance over curvature"""
    _, _, hess = objective.terms(expected)
    residual = GRADIENT_TOLERANCE * (1.0 + np.linalg.norm(objective.linear_term))
    return 2.0 * residual / np.linalg.eigvalsh(hess)[0]


@pytest.fixture
def line_barrier():
    """Cone barrier over the interval [-1, 1]"""
    return ConeBarrier(BallActionSet(1, 1.0), scale=400.0)


class TestInteriorSolve:
    """Test unconstrained (interior) minimization"""

    @pytest.mark.unit
    @pytest.mark.parametrize("gamma", [1.0, 100.0, -250.0, 1000.0])
    def test_one_dimensional_oracle(self, line_barrier, gamma):
        """Test the minimizer matches the closed-form root"""
        objective = FtrlObjective(line_barrier, np.array([gamma, 3.0]), delta=0.01)
        expected = quadratic_root(gamma)
        if abs(expected) >= 0.99:
            pytest.skip("root lies outside K_delta for this gamma")
        result = minimize(objective, np.zeros(1))
        assert not result.on_boundary
        tolerance = solution_tolerance(objective, np.array([expected]))
        assert result.point[0] == pytest.approx(expected, abs=tolerance)
        assert result.multiplier == 0.0

    @pytest.mark.unit
    @pytest.mark.parametrize("warm_fraction", [0.0, 0.937])
    def test_interior_optimum_close_to_shrunk_sphere(self, warm_fraction):
        """Test a large linear term whose minimizer sits just inside a barely shrunk ball"""
        D, c, delta, target = 3.147, 400.0, 8.8e-7, 3.1368
        barrier = ConeBarrier(BallActionSet(2, D), scale=c)
        direction = np.array([0.6, 0.8])
        pull = 2.0 * c * target / (D * D - target * target)
        objective = FtrlObjective(barrier, np.append(-pull * direction, 0.0), delta)
        assert np.linalg.norm(objective.linear_term) > 3.9e4

        result = minimize(objective, warm_fraction * objective.radius * direction)
        assert not result.on_boundary
        assert result.iterations < MAX_ITERATIONS
        expected = target * direction
        np.testing.assert_allclose(result.point, expected, rtol=0, atol=solution_tolerance(objective, expected))

    @pytest.mark.unit
    def test_zero_linear_term_gives_center(self, cone_barrier):
        """Test argmin R on the slice is the center"""
        result = minimize_barrier(cone_barrier, delta=0.1)
        np.testing.assert_array_equal(result.point, np.zeros(5))
        assert result.iterations == 0

    @pytest.mark.unit
    def test_ball_barrier_matches_cone_slice(self, line_barrier):
        """Test the ball barrier with c = 400 gives the same 1-D minimizer"""
        ball = BallBarrier(BallActionSet(1, 1.0), scale=400.0)
        cone_result = minimize(FtrlObjective(line_barrier, np.array([50.0, 0.0]), 0.01), np.zeros(1))
        ball_result = minimize(FtrlObjective(ball, np.array([50.0]), 0.01), np.zeros(1))
        assert ball_result.point[0] == pytest.approx(cone_result.point[0], rel=1e-10)

    @pytest.mark.unit
    def test_gradient_vanishes_at_solution(self, cone_barrier, rng):
        """Test the objective gradient is below tolerance at the interior solution"""
        lt = rng.standard_normal(6) * 20.0
        objective = FtrlObjective(cone_barrier, lt, delta=1e-4)
        result = minimize(objective, np.zeros(5))
        _, grad, _ = objective.terms(result.point)
        assert np.linalg.norm(grad) <= 1e-8 * (1.0 + np.linalg.norm(lt))

    @pytest.mark.unit
    def test_accepts_lifted_warm_start(self, cone_barrier):
        """Test a LiftedPoint or a lifted vector is accepted as warm start"""
        objective = FtrlObjective(cone_barrier, np.array([1.0, 0, 0, 0, 0, 0]), delta=0.1)
        a = minimize(objective, LiftedPoint(np.zeros(5)))
        b = minimize(objective, np.zeros(6))
        np.testing.assert_array_equal(a.point, b.point)
        np.testing.assert_array_equal(a.as_lifted().vector[-1], 1.0)


class TestBoundarySolve:
    """Test the single-ball active set"""

    @pytest.mark.unit
    def test_large_loss_lands_on_shrunk_sphere(self):
        """Test KKT conditions when the unconstrained minimizer leaves K_delta"""
        barrier = ConeBarrier(BallActionSet(2, 1.0), scale=400.0)
        lt = np.array([600.0, 800.0, 0.0])
        objective = FtrlObjective(barrier, lt, delta=0.5)
        result = minimize(objective, np.zeros(2))
        assert result.on_boundary, "Solution should sit on ||x|| = (1 - delta) D"
        assert abs(np.linalg.norm(result.point) - 0.5) <= 1e-10
        np.testing.assert_allclose(result.point, [-0.3, -0.4], atol=1e-9)
        assert result.multiplier > 0.0, "Active constraint needs a nonnegative multiplier"

        _, grad, _ = objective.terms(result.point)
        n = result.point / np.linalg.norm(result.point)
        kkt = grad + result.multiplier * n
        assert np.linalg.norm(kkt) <= 1e-8 * (1.0 + np.linalg.norm(lt))

    @pytest.mark.unit
    def test_constraint_released_when_multiplier_negative(self):
        """Test a boundary warm start moves back inside when the optimum is interior"""
        barrier = ConeBarrier(BallActionSet(2, 1.0), scale=400.0)
        objective = FtrlObjective(barrier, np.array([10.0, 0.0, 0.0]), delta=0.5)
        result = minimize(objective, np.array([0.5, 0.0]))
        assert not result.on_boundary
        assert result.point[0] == pytest.approx(quadratic_root(10.0), abs=1e-9)


class TestWarmStart:
    """Test warm-start invariants and failure modes"""

    @pytest.mark.unit
    def test_resolving_from_solution_is_bitwise_stable(self, cone_barrier, rng):
        """Test warm-starting at the solution returns it unchanged"""
        objective = FtrlObjective(cone_barrier, rng.standard_normal(6) * 5.0, delta=0.01)
        first = minimize(objective, np.zeros(5))
        second = minimize(objective, first.point)
        np.testing.assert_array_equal(second.point, first.point)
        assert second.iterations == 0

    @pytest.mark.unit
    def test_boundary_solution_is_bitwise_stable(self):
        """Test the same holds on the boundary"""
        barrier = ConeBarrier(BallActionSet(2, 1.0), scale=400.0)
        objective = FtrlObjective(barrier, np.array([0.0, 2000.0, 0.0]), delta=0.5)
        first = minimize(objective, np.zeros(2))
        second = minimize(objective, first.point)
        assert first.on_boundary and second.on_boundary
        np.testing.assert_array_equal(second.point, first.point)

    @pytest.mark.unit
    @pytest.mark.parametrize("loss_scale", [5.0, 200.0, 5000.0])
    def test_output_never_worse_than_warm_start(self, cone_barrier, rng, loss_scale):
        """Test the objective at the solution is at most its value at the warm start"""
        for _ in range(20):
            objective = FtrlObjective(cone_barrier, rng.standard_normal(6) * loss_scale, delta=0.01)
            warm = cone_barrier.action_set.sample_uniform(rng, 1)[0] * 0.98
            start_value = objective.value(warm)
            result = minimize(objective, warm)
            assert objective.value(result.point) <= start_value + 1e-12 * (1.0 + abs(start_value))

    @pytest.mark.unit
    @pytest.mark.parametrize("loss_scale", [5.0, 5000.0])
    def test_same_inputs_same_output(self, cone_barrier, rng, loss_scale):
        """Test two solves of the same problem agree bit for bit"""
        lt = rng.standard_normal(6) * loss_scale
        warm = cone_barrier.action_set.sample_uniform(rng, 1)[0] * 0.5
        first = minimize(FtrlObjective(cone_barrier, lt.copy(), delta=0.01), warm.copy())
        second = minimize(FtrlObjective(cone_barrier, lt.copy(), delta=0.01), warm.copy())
        np.testing.assert_array_equal(first.point, second.point)
        assert (first.iterations, first.on_boundary) == (second.iterations, second.on_boundary)

    @pytest.mark.unit
    def test_warm_start_outside_raises(self, cone_barrier):
        """Test a warm start outside K_delta is rejected"""
        objective = FtrlObjective(cone_barrier, np.zeros(6), delta=0.5)
        with pytest.raises(InvalidArgumentError):
            minimize(objective, np.array([3.0, 0, 0, 0, 0]))

    @pytest.mark.unit
    def test_iteration_cap(self, line_barrier):
        """Test ConvergenceError carries the residual and iteration count"""
        objective = FtrlObjective(line_barrier, np.array([100.0, 0.0]), delta=0.01)
        with pytest.raises(ConvergenceError) as exc_info:
            minimize(objective, np.zeros(1), max_iterations=1)
        assert exc_info.value.iterations == 1
        assert exc_info.value.residual > 0


class TestFtrlObjective:
    """Test objective construction"""

    @pytest.mark.unit
    @pytest.mark.parametrize("delta", [0.0, 1.0])
    def test_rejects_delta(self, cone_barrier, delta):
        """Test delta outside (0, 1)"""
        with pytest.raises(InvalidArgumentError):
            FtrlObjective(cone_barrier, np.zeros(6), delta)

    @pytest.mark.unit
    def test_rejects_wrong_linear_term_shape(self, cone_barrier):
        """Test the linear term must live in the barrier's space"""
        with pytest.raises(InvalidArgumentError):
            FtrlObjective(cone_barrier, np.zeros(5), 0.1)

    @pytest.mark.unit
    def test_last_coordinate_is_constant(self, cone_barrier):
        """Test the lifted coordinate of the linear term only shifts the value"""
        x = np.array([0.5, 0.0, 1.0, 0.0, 0.0])
        a = FtrlObjective(cone_barrier, np.array([1.0, 2.0, 3.0, 4.0, 5.0, 0.0]), 0.1)
        b = FtrlObjective(cone_barrier, np.array([1.0, 2.0, 3.0, 4.0, 5.0, 7.0]), 0.1)
        assert b.value(x) - a.value(x) == pytest.approx(7.0)
        np.testing.assert_array_equal(a.terms(x)[1], b.terms(x)[1])
