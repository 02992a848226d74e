"""
Per-round FTRL subproblem:

    minimize  linear_term . embed(x) + R(embed(x))   over ||x|| <= (1 - delta) D

Newton's method on the spatial variables with a backtracking line search and a
single-ball active set. Each step tries the full Newton step first and halves
it until the trial point is feasible and passes the Armijo test. When a trial
leaves K_delta it is projected radially onto the sphere of radius
(1 - delta) D and the solver switches to Newton steps on that sphere; the
constraint is released again if its KKT multiplier turns negative.
"""

import logging
import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import linalg

from .barrier import ConeBarrier, _HessianBarrier
from .errors import BarrierDomainError, ConvergenceError, InvalidArgumentError
from .geometry import LiftedPoint

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 200
ARMIJO = 1e-4
GRADIENT_TOLERANCE = 1e-8
BOUNDARY_TOLERANCE = 1e-10
QUADRATIC_REGION = 0.25
MIN_STEP = 1e-20


@dataclass(frozen=True)
class FtrlObjective:
    """eta * sum(g) . x' + R(x') restricted to the slice over K_delta"""
    barrier: _HessianBarrier
    linear_term: np.ndarray
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidArgumentError(f"delta must lie in (0, 1), got {self.delta}")
        lt = np.asarray(self.linear_term, dtype=float)
        if lt.shape != (self.barrier.space_dimension,):
            raise InvalidArgumentError(
                f"linear_term must have shape ({self.barrier.space_dimension},), got {lt.shape}"
            )
        object.__setattr__(self, 'linear_term', lt)

    @property
    def dimension(self) -> int:
        return self.barrier.action_set.dimension

    @property
    def radius(self) -> float:
        return (1.0 - self.delta) * self.barrier.action_set.radius

    def terms(self, x: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Objective value, gradient and Hessian in the spatial variables"""
        value, grad, hess = self.barrier.slice_terms(x)
        d = self.dimension
        lt = self.linear_term
        value += float(lt[:d] @ x) + float(lt[d:].sum())
        return value, grad + lt[:d], hess

    def value(self, x: np.ndarray) -> float:
        return self.terms(x)[0]


@dataclass(frozen=True)
class SolverResult:
    point: np.ndarray
    iterations: int
    residual: float
    on_boundary: bool
    multiplier: float

    def as_lifted(self) -> LiftedPoint:
        return LiftedPoint(self.point)


def _spatial(warm_start: Union[LiftedPoint, np.ndarray], objective: FtrlObjective) -> np.ndarray:
    if isinstance(warm_start, LiftedPoint):
        return np.array(warm_start.spatial)
    arr = np.asarray(warm_start, dtype=float)
    if isinstance(objective.barrier, ConeBarrier) and arr.shape == (objective.dimension + 1,):
        return arr[:-1].copy()
    return arr.copy()


def _try_value(objective: FtrlObjective, x: np.ndarray) -> float:
    try:
        return objective.value(x)
    except BarrierDomainError:
        return math.inf


def _boundary_step(objective: FtrlObjective, x: np.ndarray, value: float,
                   grad: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """One Newton step on the sphere ||x|| = r followed by radial retraction"""
    r = objective.radius
    n = x / np.linalg.norm(x)
    P = np.eye(x.shape[0]) - np.outer(n, n)
    g_tan = P @ grad
    radial = float(n @ grad) / np.linalg.norm(x)
    M = P @ hess @ P - radial * P
    try:
        factor = linalg.cho_factor(M + np.outer(n, n))
        z = -linalg.cho_solve(factor, g_tan)
    except linalg.LinAlgError:
        z = -g_tan / np.linalg.norm(hess, 2)

    step = 1.0
    scale = 1e-12 * (1.0 + abs(value))
    candidate = x
    while step >= MIN_STEP:
        trial = x + step * z
        trial = r * trial / np.linalg.norm(trial)
        if _try_value(objective, trial) <= value + scale:
            return trial
        candidate = trial
        step *= 0.5
    return candidate


def minimize(objective: FtrlObjective, warm_start: Union[LiftedPoint, np.ndarray],
             max_iterations: int = MAX_ITERATIONS) -> SolverResult:
    """
    Solve the FTRL subproblem starting from warm_start.

    Args:
        objective: linear term, barrier and shrinkage
        warm_start: previous iterate (lifted or spatial), inside K_delta
        max_iterations: cap on Newton steps

    Returns:
        SolverResult with the minimizer in spatial coordinates

    Raises:
        ConvergenceError: tolerance not met within max_iterations
    """
    x = _spatial(warm_start, objective)
    if x.shape != (objective.dimension,):
        raise InvalidArgumentError(f"warm start must have {objective.dimension} spatial coordinates, got {x.shape}")
    r = objective.radius
    norm_x = np.linalg.norm(x)
    if norm_x > r * (1.0 + BOUNDARY_TOLERANCE):
        raise InvalidArgumentError(f"warm start norm {norm_x:.6g} exceeds shrunk radius {r:.6g}")

    tolerance = GRADIENT_TOLERANCE * (1.0 + np.linalg.norm(objective.linear_term))
    on_boundary = norm_x >= r * (1.0 - BOUNDARY_TOLERANCE)
    residual = math.inf

    for iteration in range(max_iterations):
        value, grad, hess = objective.terms(x)

        if on_boundary:
            norm_x = np.linalg.norm(x)
            multiplier = -float(x @ grad) / norm_x
            residual = float(np.linalg.norm(grad + multiplier * x / norm_x))
            if multiplier >= 0.0:
                if residual <= tolerance:
                    logger.debug(f"FTRL solve converged on the boundary in {iteration} steps")
                    return SolverResult(x, iteration, residual, True, multiplier)
                x = _boundary_step(objective, x, value, grad, hess)
                continue
            on_boundary = False

        residual = float(np.linalg.norm(grad))
        if residual <= tolerance:
            logger.debug(f"FTRL solve converged in the interior in {iteration} steps")
            return SolverResult(x, iteration, residual, False, 0.0)

        dx = -linalg.solve(hess, grad, assume_a='pos')
        slope = float(grad @ dx)
        decrement = math.sqrt(max(-slope, 0.0))
        # full Newton step, halved until feasible with sufficient decrease
        step = 1.0

        while True:
            trial = x + step * dx
            trial_norm = np.linalg.norm(trial)
            if trial_norm > r:
                projected = r * trial / trial_norm
                if _try_value(objective, projected) < value:
                    x, on_boundary = projected, True
                    break
            else:
                trial_value = _try_value(objective, trial)
                if decrement < QUADRATIC_REGION and trial_value < math.inf:
                    x = trial
                    break
                if trial_value <= value + ARMIJO * step * slope:
                    x = trial
                    break
            step *= 0.5
            if step < MIN_STEP:
                raise ConvergenceError(
                    f"line search stalled after {iteration} steps (gradient residual {residual:.3e})",
                    residual=residual, iterations=iteration,
                )

    raise ConvergenceError(
        f"FTRL solver did not converge in {max_iterations} steps (residual {residual:.3e})",
        residual=residual, iterations=max_iterations,
    )


def minimize_barrier(barrier: _HessianBarrier, delta: float) -> SolverResult:
    """x'_1 = argmin of R over the shrunk slice (the center, by symmetry, for a centered ball)"""
    objective = FtrlObjective(barrier, np.zeros(barrier.space_dimension), delta)
    return minimize(objective, np.zeros(barrier.action_set.dimension))
