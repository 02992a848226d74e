"""
Normal barrier on the cone over the ball, plus the plain ball barrier used by
the unlifted learner.

The cone barrier is

    R(x, b) = c * ( -log(1 - ||x||^2 / (b^2 D^2)) - 2 k log b )

which is logarithmically homogeneous with parameter nu = 2 c k. All
derivatives are analytic; finite differences only appear in the validators.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from .errors import BarrierDomainError, IllConditionedError, InvalidArgumentError
from .geometry import BallActionSet
from .sampling import sample_sphere_orthogonal

logger = logging.getLogger(__name__)

BOUNDARY_MARGIN = 1e-14
MIN_EIGENVALUE = 1e-14


@dataclass(frozen=True)
class BarrierEval:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class HessianRoot:
    """
    Eigendecomposition H = V diag(w) V^T of a barrier Hessian.

    Gives the symmetric inverse square root A = H^{-1/2} and solves against A
    without forming A^{-1} explicitly.
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def inv_sqrt(self) -> np.ndarray:
        V = self.eigenvectors
        A = (V / np.sqrt(self.eigenvalues)) @ V.T
        return 0.5 * (A + A.T)

    def solve_inv_sqrt(self, mu: np.ndarray) -> np.ndarray:
        """Return z with A z = mu, i.e. z = H^{1/2} mu"""
        V = self.eigenvectors
        return V @ (np.sqrt(self.eigenvalues) * (V.T @ mu))

    def apply_inv_sqrt(self, mu: np.ndarray) -> np.ndarray:
        V = self.eigenvectors
        return V @ ((V.T @ mu) / np.sqrt(self.eigenvalues))


class _HessianBarrier:
    """Shared Hessian machinery; subclasses provide eval() and the embedding"""

    effective_nu: float
    space_dimension: int

    def eval(self, p: np.ndarray) -> BarrierEval:
        raise NotImplementedError

    def value(self, p: np.ndarray) -> float:
        return self.eval(p).value

    def embed(self, x: np.ndarray) -> np.ndarray:
        """Map a spatial action point into the barrier's domain"""
        raise NotImplementedError

    def slice_terms(self, x: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Value, spatial gradient and spatial Hessian block at embed(x)"""
        d = x.shape[0]
        ev = self.eval(self.embed(x))
        return ev.value, ev.gradient[:d], ev.hessian[:d, :d]

    def is_interior(self, p: np.ndarray) -> bool:
        try:
            self.eval(p)
        except BarrierDomainError:
            return False
        return True

    def hessian_root(self, p: np.ndarray) -> HessianRoot:
        H = self.eval(p).hessian
        w, V = linalg.eigh(H)
        if w[0] < MIN_EIGENVALUE:
            raise IllConditionedError(
                f"Hessian eigenvalue {w[0]:.3e} below {MIN_EIGENVALUE:.0e}; point is numerically on the boundary",
                float(w[0]),
            )
        return HessianRoot(w, V)

    def inv_sqrt_hessian(self, p: np.ndarray) -> np.ndarray:
        return self.hessian_root(p).inv_sqrt

    def local_norm(self, p: np.ndarray, h: np.ndarray) -> float:
        H = self.eval(p).hessian
        h = np.asarray(h, dtype=float)
        return math.sqrt(max(float(h @ H @ h), 0.0))

    def dual_local_norm(self, p: np.ndarray, h: np.ndarray) -> float:
        H = self.eval(p).hessian
        h = np.asarray(h, dtype=float)
        z = linalg.solve(H, h, assume_a='pos')
        return math.sqrt(max(float(h @ z), 0.0))


class ConeBarrier(_HessianBarrier):
    """
    Normal barrier on con(K) = {(x, b) : ||x|| < b D, b > 0}.

    Args:
        action_set: the ball K
        scale: the multiplier c in front of the barrier
        inner_nu: k in the -2 k log b term
    """

    def __init__(self, action_set: BallActionSet, scale: float = 400.0, inner_nu: float = 1.0):
        if not scale > 0:
            raise InvalidArgumentError(f"barrier scale c must be positive, got {scale}")
        if not inner_nu >= 1:
            raise InvalidArgumentError(f"inner_nu must be >= 1, got {inner_nu}")
        self.action_set = action_set
        self.scale = float(scale)
        self.inner_nu = float(inner_nu)
        self.space_dimension = action_set.dimension + 1

    @property
    def effective_nu(self) -> float:
        return 2.0 * self.scale * self.inner_nu

    def __repr__(self) -> str:
        return (f"ConeBarrier(d={self.action_set.dimension}, D={self.action_set.radius}, "
                f"c={self.scale}, inner_nu={self.inner_nu})")

    def embed(self, x: np.ndarray) -> np.ndarray:
        return np.append(np.asarray(x, dtype=float), 1.0)

    def _split(self, p: np.ndarray) -> Tuple[np.ndarray, float, float]:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.space_dimension,):
            raise InvalidArgumentError(f"cone point must have shape ({self.space_dimension},), got {p.shape}")
        x, b = p[:-1], float(p[-1])
        if not b > 0:
            raise BarrierDomainError(f"cone point has b = {b} <= 0", constraint="b > 0")
        D = self.action_set.radius
        margin = 1.0 - float(x @ x) / (b * b * D * D)
        if margin <= BOUNDARY_MARGIN:
            raise BarrierDomainError(
                f"cone point violates ||x|| < b*D (1 - ||x||^2/(b^2 D^2) = {margin:.3e})",
                constraint="||x|| < b*D",
            )
        return x, b, margin

    def eval(self, p: np.ndarray) -> BarrierEval:
        x, b, margin = self._split(p)
        c, k = self.scale, self.inner_nu
        D2 = self.action_set.radius ** 2
        u = b * b * D2 * margin
        n = x.shape[0]

        value = c * (-math.log(margin) - 2.0 * k * math.log(b))

        grad = np.empty(n + 1)
        grad[:n] = 2.0 * c * x / u
        grad[n] = c * (-2.0 * b * D2 / u + 2.0 * (1.0 - k) / b)

        H = np.empty((n + 1, n + 1))
        H[:n, :n] = c * (2.0 * np.eye(n) / u + 4.0 * np.outer(x, x) / (u * u))
        cross = -4.0 * c * b * D2 * x / (u * u)
        H[:n, n] = cross
        H[n, :n] = cross
        H[n, n] = c * (-2.0 * D2 / u + 4.0 * b * b * D2 * D2 / (u * u) - 2.0 * (1.0 - k) / (b * b))
        return BarrierEval(value, grad, H)

    def slice_terms(self, x: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        # b = 1 specialization of eval()
        x = np.asarray(x, dtype=float)
        D2 = self.action_set.radius ** 2
        margin = 1.0 - float(x @ x) / D2
        if margin <= BOUNDARY_MARGIN:
            raise BarrierDomainError(
                f"slice point violates ||x|| < D (margin {margin:.3e})", constraint="||x|| < b*D"
            )
        c = self.scale
        u = D2 * margin
        value = -c * math.log(margin)
        grad = 2.0 * c * x / u
        hess = c * (2.0 * np.eye(x.shape[0]) / u + 4.0 * np.outer(x, x) / (u * u))
        return value, grad, hess


class BallBarrier(_HessianBarrier):
    """
    Self-concordant barrier -c log(1 - ||x||^2 / D^2) on K itself, no lifting.

    Its barrier parameter is c; it is not logarithmically homogeneous.
    """

    def __init__(self, action_set: BallActionSet, scale: float = 400.0):
        if not scale > 0:
            raise InvalidArgumentError(f"barrier scale c must be positive, got {scale}")
        self.action_set = action_set
        self.scale = float(scale)
        self.space_dimension = action_set.dimension

    @property
    def effective_nu(self) -> float:
        return self.scale

    def __repr__(self) -> str:
        return f"BallBarrier(d={self.action_set.dimension}, D={self.action_set.radius}, c={self.scale})"

    def embed(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).copy()

    def eval(self, p: np.ndarray) -> BarrierEval:
        x = np.asarray(p, dtype=float)
        if x.shape != (self.space_dimension,):
            raise InvalidArgumentError(f"point must have shape ({self.space_dimension},), got {x.shape}")
        D2 = self.action_set.radius ** 2
        margin = 1.0 - float(x @ x) / D2
        if margin <= BOUNDARY_MARGIN:
            raise BarrierDomainError(
                f"point violates ||x|| < D (margin {margin:.3e})", constraint="||x|| < D"
            )
        c = self.scale
        u = D2 * margin
        value = -c * math.log(margin)
        grad = 2.0 * c * x / u
        hess = c * (2.0 * np.eye(x.shape[0]) / u + 4.0 * np.outer(x, x) / (u * u))
        return BarrierEval(value, grad, hess)


# ---------------------------------------------------------------------------
# Normal-barrier identity checks
# ---------------------------------------------------------------------------

IDENTITY_CHECKS = (
    'homogeneity',
    'self_norm',
    'hessian_gradient',
    'gradient_bound',
    'cone_norm_bound',
    'cone_gap_bound',
    'self_concordance',
    'dikin_stability',
    'dikin_containment',
    'midpoint_convexity',
)


@dataclass
class ValidationReport:
    """
    Residuals of the normal-barrier identities at one point.

    `residuals` are scale-relative and nonnegative (inequalities report only
    their violation); `raw` keeps the unscaled quantities.
    """
    point: np.ndarray
    t: float
    residuals: Dict[str, float] = field(default_factory=dict)
    raw: Dict[str, float] = field(default_factory=dict)

    def worst(self) -> Tuple[str, float]:
        name = max(self.residuals, key=self.residuals.get)
        return name, self.residuals[name]

    def passed(self, tolerance: float = 1e-8) -> bool:
        return all(r <= tolerance for r in self.residuals.values())

    def failing(self, tolerance: float = 1e-8) -> Dict[str, float]:
        return {k: v for k, v in self.residuals.items() if not v <= tolerance}


def random_cone_point(barrier: ConeBarrier, rng: np.random.Generator,
                      b_range: Tuple[float, float] = (0.5, 2.0), fill: float = 0.95) -> np.ndarray:
    """Random interior point of con(K): b uniform in b_range, x uniform in the ball of radius fill*b*D"""
    K = barrier.action_set
    b = rng.uniform(*b_range)
    x = K.sample_uniform(rng, 1)[0] * fill * b
    return np.append(x, b)


def validate_normal_barrier(barrier: ConeBarrier, p: np.ndarray, t: float,
                            rng: Optional[np.random.Generator] = None,
                            n_directions: int = 10) -> ValidationReport:
    """
    Evaluate the normal-barrier identities at p.

    Args:
        barrier: the cone barrier under test
        p: interior point of the cone
        t: homogeneity factor; t * p must be interior as well
        rng: generator for the random directions (seed 0 if omitted)
        n_directions: random directions per inequality

    Returns:
        ValidationReport with one residual per identity
    """
    if not t > 0:
        raise InvalidArgumentError(f"t must be positive, got {t}")
    rng = rng if rng is not None else np.random.default_rng(0)
    p = np.asarray(p, dtype=float)
    nu = barrier.effective_nu
    sqrt_nu = math.sqrt(nu)

    ev = barrier.eval(p)
    ev_t = barrier.eval(t * p)
    report = ValidationReport(point=p.copy(), t=t)

    homogeneity = ev_t.value - ev.value + nu * math.log(t)
    report.raw['homogeneity'] = homogeneity
    report.residuals['homogeneity'] = abs(homogeneity) / (1.0 + abs(ev.value))

    self_norm = float(p @ ev.hessian @ p)
    report.raw['self_norm'] = self_norm - nu
    report.residuals['self_norm'] = abs(self_norm - nu) / nu

    hg = np.linalg.norm(ev.hessian @ p + ev.gradient)
    report.raw['hessian_gradient'] = hg
    report.residuals['hessian_gradient'] = hg / (1.0 + np.linalg.norm(ev.gradient))

    gradient_bound = -np.inf
    cone_norm = -np.inf
    cone_gap = -np.inf
    third = -np.inf
    dikin = -np.inf
    containment = -np.inf
    convexity = -np.inf
    n = barrier.space_dimension
    D = barrier.action_set.radius
    on_slice = p / p[-1]
    slice_root = barrier.hessian_root(on_slice)
    for _ in range(n_directions):
        h = rng.standard_normal(n)
        h_norm = barrier.local_norm(p, h)
        gradient_bound = max(gradient_bound, (abs(ev.gradient @ h) - sqrt_nu * h_norm) / (1.0 + sqrt_nu * h_norm))

        q = random_cone_point(barrier, rng, b_range=(0.1, 2.0), fill=1.0)
        q_norm = barrier.local_norm(p, q)
        neg_dir = -float(ev.gradient @ q)
        cone_norm = max(cone_norm, (q_norm - neg_dir) / (1.0 + neg_dir))
        cone_gap = max(cone_gap, (float(ev.gradient @ (q - p)) - nu) / nu)

        u = h / h_norm
        step = 1e-4
        d3 = (u @ barrier.eval(p + step * u).hessian @ u - u @ barrier.eval(p - step * u).hessian @ u) / (2 * step)
        third = max(third, (abs(d3) - 2.0) / 2.0)

        r = 0.5
        y = p + r * u
        w = rng.standard_normal(n)
        w_p = barrier.local_norm(p, w)
        w_y = barrier.local_norm(y, w)
        dikin = max(dikin, (w_p * (1.0 - r) - w_y) / w_p)

        # unit-local-norm step along the slice b = 1
        mu = sample_sphere_orthogonal(slice_root.inv_sqrt[:, -1], rng)
        step_on_slice = slice_root.apply_inv_sqrt(mu)
        step_on_slice[-1] = 0.0
        y = on_slice + step_on_slice
        if not barrier.is_interior(y):
            containment = max(containment, float(np.linalg.norm(y[:-1])) / D - 1.0)

        z = random_cone_point(barrier, rng)
        value_z = barrier.value(z)
        gap = barrier.value(0.5 * (p + z)) - 0.5 * (ev.value + value_z)
        convexity = max(convexity, gap / (1.0 + abs(ev.value) + abs(value_z)))

    report.raw.update({
        'gradient_bound': gradient_bound,
        'cone_norm_bound': cone_norm,
        'cone_gap_bound': cone_gap,
        'self_concordance': third,
        'dikin_stability': dikin,
        'dikin_containment': containment,
        'midpoint_convexity': convexity,
    })
    for key in IDENTITY_CHECKS:
        if key not in report.residuals:
            report.residuals[key] = max(0.0, report.raw[key])
    return report
