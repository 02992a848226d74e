"""
Property suites behind the `validate` command: the normal-barrier identities
and finite-difference derivative checks at random cone points, and the
statistical checks of the constrained sphere sampler.

Both suites return a residual table (one row per check) as a DataFrame with
columns suite, check, residual, tolerance, passed.
"""

import logging
import math
from typing import List

import numpy as np
import pandas as pd
from scipy import stats

from bandit.barrier import IDENTITY_CHECKS, ConeBarrier, random_cone_point, validate_normal_barrier
from bandit.errors import InvalidArgumentError
from bandit.geometry import BallActionSet
from bandit.sampling import make_rng, sample_sphere_orthogonal, sample_sphere_orthogonal_batch, spawn_streams

logger = logging.getLogger(__name__)

IDENTITY_TOLERANCE = 1e-8
DERIVATIVE_TOLERANCE = 1e-5
FD_STEP = 1e-5
UNIT_NORM_TOLERANCE = 1e-12
ORTHOGONALITY_TOLERANCE = 1e-10
KS_TOLERANCE = 0.01
DETERMINISM_DRAWS = 1000

COLUMNS = ['suite', 'check', 'residual', 'tolerance', 'passed']


def _row(suite: str, check: str, residual: float, tolerance: float) -> dict:
    return {
        'suite': suite,
        'check': check,
        'residual': float(residual),
        'tolerance': float(tolerance),
        'passed': bool(residual <= tolerance),
    }


def finite_difference_residuals(barrier: ConeBarrier, p: np.ndarray, step: float = FD_STEP):
    """Relative errors of the analytic gradient and Hessian against central differences"""
    ev = barrier.eval(p)
    n = p.shape[0]
    grad_fd = np.empty(n)
    hess_fd = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step * max(1.0, abs(p[i]))
        h = e[i]
        grad_fd[i] = (barrier.value(p + e) - barrier.value(p - e)) / (2.0 * h)
        hess_fd[:, i] = (barrier.eval(p + e).gradient - barrier.eval(p - e).gradient) / (2.0 * h)
    hess_fd = 0.5 * (hess_fd + hess_fd.T)
    grad_err = np.linalg.norm(grad_fd - ev.gradient) / (1.0 + np.linalg.norm(ev.gradient))
    hess_err = np.linalg.norm(hess_fd - ev.hessian) / (1.0 + np.linalg.norm(ev.hessian))
    return float(grad_err), float(hess_err)


def barrier_suite(rng: np.random.Generator, trials: int = 100, dimension: int = 5,
                  radius: float = 5.0, scale: float = 400.0) -> pd.DataFrame:
    """
    Worst residual of each normal-barrier identity over `trials` random cone points.

    A barrier that cannot be constructed (for instance a nonpositive scale)
    yields a single failing 'barrier_construction' row.
    """
    try:
        barrier = ConeBarrier(BallActionSet(dimension, radius), scale=scale)
    except InvalidArgumentError as e:
        logger.error(f"❌ barrier construction failed: {e}")
        return pd.DataFrame([_row('barrier', 'barrier_construction', math.inf, 0.0)], columns=COLUMNS)

    worst = {name: 0.0 for name in IDENTITY_CHECKS}
    worst_gradient = worst_hessian = 0.0
    for _ in range(trials):
        p = random_cone_point(barrier, rng)
        t = rng.uniform(0.5, 2.0)
        report = validate_normal_barrier(barrier, p, t, rng)
        for name, residual in report.residuals.items():
            worst[name] = max(worst[name], residual)
        grad_err, hess_err = finite_difference_residuals(barrier, p)
        worst_gradient = max(worst_gradient, grad_err)
        worst_hessian = max(worst_hessian, hess_err)

    rows = [_row('barrier', name, residual, IDENTITY_TOLERANCE) for name, residual in worst.items()]
    rows.append(_row('barrier', 'gradient_fd', worst_gradient, DERIVATIVE_TOLERANCE))
    rows.append(_row('barrier', 'hessian_fd', worst_hessian, DERIVATIVE_TOLERANCE))
    return pd.DataFrame(rows, columns=COLUMNS)


def planar_angles(samples: np.ndarray, v: np.ndarray) -> np.ndarray:
    """atan2(mu . u2, mu . u1) for an orthonormal pair (u1, u2) spanning part of v-perp"""
    n = v.shape[0]
    basis = np.column_stack([v, np.eye(n)[:, :2]])
    Q, _ = np.linalg.qr(basis)
    u1, u2 = Q[:, 1], Q[:, 2]
    return np.arctan2(samples @ u2, samples @ u1)


def sampler_suite(rng: np.random.Generator, draws: int = 100_000, dimension: int = 5,
                  seed: int = 0) -> pd.DataFrame:
    """Norm, orthogonality, mean, planar-angle uniformity and determinism of the sampler"""
    barrier = ConeBarrier(BallActionSet(dimension))
    p = random_cone_point(barrier, rng)
    v = barrier.hessian_root(p).inv_sqrt[:, -1]
    v_norm = np.linalg.norm(v)

    samples = sample_sphere_orthogonal_batch(v, draws, rng)
    unit = np.max(np.abs(np.linalg.norm(samples, axis=1) - 1.0))
    ortho = np.max(np.abs(samples @ v)) / v_norm
    mean = np.max(np.abs(samples.mean(axis=0)))
    ks = stats.kstest(planar_angles(samples, v), 'uniform', args=(-math.pi, 2.0 * math.pi)).statistic

    a, b = make_rng(seed), make_rng(seed)
    mismatch = sum(
        not np.array_equal(sample_sphere_orthogonal(v, a), sample_sphere_orthogonal(v, b))
        for _ in range(DETERMINISM_DRAWS)
    )

    return pd.DataFrame([
        _row('sampler', 'unit_norm', unit, UNIT_NORM_TOLERANCE),
        _row('sampler', 'orthogonality', ortho, ORTHOGONALITY_TOLERANCE),
        _row('sampler', 'mean', mean, 4.0 / math.sqrt(draws)),
        _row('sampler', 'planar_angle_ks', ks, KS_TOLERANCE),
        _row('sampler', 'determinism', float(mismatch), 0.0),
    ], columns=COLUMNS)


def run_validation(seed: int = 0, trials: int = 100, draws: int = 100_000,
                   scale: float = 400.0, dimension: int = 5, radius: float = 5.0) -> pd.DataFrame:
    """Barrier suite followed by the sampler suite, each on its own stream of `seed`"""
    barrier_rng, sampler_rng = spawn_streams(seed, 2)
    tables: List[pd.DataFrame] = [
        barrier_suite(barrier_rng, trials=trials, dimension=dimension, radius=radius, scale=scale),
        sampler_suite(sampler_rng, draws=draws, dimension=dimension, seed=seed),
    ]
    table = pd.concat(tables, ignore_index=True)
    failed = failing_checks(table)
    if failed:
        logger.warning(f"⚠️ validation failed: {', '.join(failed)}")
    else:
        logger.info(f"✅ all {len(table)} validation checks passed")
    return table


def failing_checks(table: pd.DataFrame) -> List[str]:
    return table.loc[~table['passed'], 'check'].tolist()
