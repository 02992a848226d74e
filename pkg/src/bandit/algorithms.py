"""
Bandit learners sharing one act -> observe -> update contract:

- LiftedScrible: SCRiBLe run on the slice b = 1 of the cone over K with a
  normal barrier on that cone (the primary algorithm).
- ClassicScrible: SCRiBLe directly on K with the ball barrier, no lifting.
- IncreasingLrScrible: the lifted learner with a learning rate that grows by
  a factor kappa whenever the iterate moves more than rho in local norm.
  This is a simplified stand-in for increasing-learning-rate schedules.
"""

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Type

import numpy as np

from .barrier import BallBarrier, ConeBarrier, HessianRoot, _HessianBarrier
from .errors import InvalidArgumentError
from .ftrl_solver import FtrlObjective, minimize, minimize_barrier
from .geometry import BallActionSet
from .sampling import sample_sphere, sample_sphere_orthogonal, sample_sphere_orthogonal_batch

logger = logging.getLogger(__name__)

LOSS_SLACK = 1e-9
LIFT_TOLERANCE = 1e-10
EPSILON_LIMIT = 1.0


@dataclass
class LearnerParams:
    """
    Parameters shared by all learners.

    `eta`, `delta` drive the FTRL update; `scale` and `inner_nu` configure the
    barrier; `radius` is D.
    """
    eta: float
    delta: float
    dimension: int
    horizon: int
    radius: float = 5.0
    scale: float = 400.0
    inner_nu: float = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidArgumentError(f"eta must be positive, got {self.eta}")
        if not 0.0 < self.delta < 1.0:
            raise InvalidArgumentError(f"delta must lie in (0, 1), got {self.delta}")
        if self.dimension < 1 or self.horizon < 1:
            raise InvalidArgumentError(
                f"dimension and horizon must be >= 1, got d={self.dimension}, T={self.horizon}"
            )
        if not self.proximity_condition:
            logger.warning(
                f"⚠️ 4*d*eta = {4 * self.dimension * self.eta:.4g} >= 1/2; "
                f"the iterate-proximity guarantee does not apply to these parameters"
            )

    @property
    def proximity_condition(self) -> bool:
        """Whether 4 d eta < 1/2 holds"""
        return 4.0 * self.dimension * self.eta < 0.5

    @property
    def action_set(self) -> BallActionSet:
        return BallActionSet(self.dimension, self.radius)


def default_delta(epsilon: float, horizon: int) -> float:
    return 1.0 / horizon ** 2 if epsilon == 0 else math.sqrt(epsilon)


def default_params(epsilon: float, horizon: int, dimension: int, nu: float,
                   G: float = 1.0, D: float = 5.0, variant: str = 'theorem',
                   scale: float = 400.0, inner_nu: float = 1.0) -> LearnerParams:
    """
    Parameter choice of the expected-regret theorem.

    delta = 1/T^2 when epsilon = 0, sqrt(epsilon) otherwise. The 'theorem'
    variant sets eta = sqrt(nu ln(1/delta)) / (2 d sqrt(T)); the 'section7'
    variant uses the experimental eta = 20 sqrt(ln(1/delta)) / (4 d sqrt(T)).

    G does not enter eta or delta; it is accepted so that callers pass the
    full problem description in one place.
    """
    if horizon < 1 or dimension < 1:
        raise InvalidArgumentError(f"T and d must be >= 1, got T={horizon}, d={dimension}")
    if not nu >= 1:
        raise InvalidArgumentError(f"nu must be >= 1, got {nu}")
    if not 0.0 <= epsilon < EPSILON_LIMIT:
        raise InvalidArgumentError(f"epsilon must lie in [0, 1), got {epsilon}")

    delta = default_delta(epsilon, horizon)
    log_inv_delta = math.log(1.0 / delta)
    if variant == 'theorem':
        eta = math.sqrt(nu * log_inv_delta) / (2.0 * dimension * math.sqrt(horizon))
    elif variant == 'section7':
        eta = 20.0 * math.sqrt(log_inv_delta) / (4.0 * dimension * math.sqrt(horizon))
    else:
        raise InvalidArgumentError(f"unknown parameter variant '{variant}' (expected 'theorem' or 'section7')")
    if eta == 0.0:
        # T = 1 with epsilon = 0 gives delta = 1 and ln(1/delta) = 0
        raise InvalidArgumentError(f"eta degenerates to 0 for T={horizon}, epsilon={epsilon}")
    return LearnerParams(eta=eta, delta=delta, dimension=dimension, horizon=horizon,
                         radius=D, scale=scale, inner_nu=inner_nu)


@dataclass
class PendingRound:
    root: HessianRoot
    mu: np.ndarray
    played: np.ndarray


@dataclass
class LearnerState:
    """Per-round state: iterate x'_t in the barrier's space, estimator sum, pending round"""
    round: int
    iterate: np.ndarray
    estimator_sum: np.ndarray
    pending: Optional[PendingRound] = None


@dataclass(frozen=True)
class RoundRecord:
    t: int
    iterate: np.ndarray
    next_iterate: np.ndarray
    mu: np.ndarray
    played: np.ndarray
    point: np.ndarray
    loss: float
    estimator: np.ndarray
    eta: float
    step_norm: float
    estimator_dual_norm: float
    movement_norm: float
    solver_iterations: int
    diagnostics: Dict[str, float] = field(default_factory=dict)


class BanditLearner(ABC):
    """
    Three-phase learner: act() draws and returns y_t, the caller evaluates
    the loss, update() consumes it and moves the iterate.
    """

    name = 'base'

    def __init__(self, params: LearnerParams):
        self.params = params
        self.action_set = params.action_set
        self.barrier = self._make_barrier()
        self.normalization_violations = 0
        self.reset()

    @abstractmethod
    def _make_barrier(self) -> _HessianBarrier:
        ...

    @abstractmethod
    def _draw_direction(self, root: HessianRoot, rng: np.random.Generator) -> np.ndarray:
        ...

    @abstractmethod
    def sample_directions(self, root: HessianRoot, n: int, rng: np.random.Generator) -> np.ndarray:
        """n direction draws at once, shape (n, space_dimension)"""

    def reset(self):
        start = minimize_barrier(self.barrier, self.params.delta)
        self.initial_iterate = self.barrier.embed(start.point)
        self.state = LearnerState(
            round=1,
            iterate=self.initial_iterate.copy(),
            estimator_sum=np.zeros(self.barrier.space_dimension),
        )

    @property
    def spatial_iterate(self) -> np.ndarray:
        return self.state.iterate[:self.action_set.dimension].copy()

    def learning_rate(self) -> float:
        return self.params.eta

    def _finalize_play(self, played: np.ndarray) -> np.ndarray:
        return played

    def act(self, rng: np.random.Generator) -> np.ndarray:
        """Draw the Dikin-ellipsoid point y_t around the current iterate and return it"""
        if self.state.pending is not None:
            raise InvalidArgumentError("act() called twice without update()")
        root = self.barrier.hessian_root(self.state.iterate)
        mu = self._draw_direction(root, rng)
        played = self._finalize_play(self.state.iterate + root.inv_sqrt @ mu)
        self.state.pending = PendingRound(root, mu, played)
        return played[:self.action_set.dimension].copy()

    def update(self, loss: float) -> RoundRecord:
        """Build the loss estimator from the observed loss and solve the next FTRL step"""
        pending = self.state.pending
        if pending is None:
            raise InvalidArgumentError("update() called without a pending act()")
        loss = float(loss)
        if abs(loss) > 1.0 + LOSS_SLACK:
            self.normalization_violations += 1
            if self.normalization_violations == 1:
                logger.warning(f"⚠️ |loss| = {abs(loss):.4g} > 1 at round {self.state.round}; "
                               f"regret bounds assume |f| <= 1")

        d = self.action_set.dimension
        iterate = self.state.iterate
        estimator = d * loss * pending.root.solve_inv_sqrt(pending.mu)
        self.state.estimator_sum = self.state.estimator_sum + estimator
        self._before_solve()
        eta_t = self.learning_rate()

        objective = FtrlObjective(self.barrier, eta_t * self.state.estimator_sum, self.params.delta)
        result = minimize(objective, iterate[:d])
        next_iterate = self.barrier.embed(result.point)

        record = RoundRecord(
            t=self.state.round,
            iterate=iterate,
            next_iterate=next_iterate,
            mu=pending.mu,
            played=pending.played,
            point=pending.played[:d].copy(),
            loss=loss,
            estimator=estimator,
            eta=eta_t,
            step_norm=self.barrier.local_norm(iterate, pending.played - iterate),
            estimator_dual_norm=self.barrier.dual_local_norm(iterate, estimator),
            movement_norm=self.barrier.local_norm(iterate, next_iterate - iterate),
            solver_iterations=result.iterations,
            diagnostics={'solver_residual': result.residual, 'on_boundary': float(result.on_boundary)},
        )
        self.state = LearnerState(
            round=self.state.round + 1,
            iterate=next_iterate,
            estimator_sum=self.state.estimator_sum,
        )
        return record

    def _before_solve(self):
        pass


class LiftedScrible(BanditLearner):
    """SCRiBLe on the lifted slice with the cone barrier"""

    name = 'lifted'

    def _make_barrier(self) -> ConeBarrier:
        return ConeBarrier(self.action_set, scale=self.params.scale, inner_nu=self.params.inner_nu)

    def _draw_direction(self, root: HessianRoot, rng: np.random.Generator) -> np.ndarray:
        # mu orthogonal to A e_{d+1} keeps the last coordinate of A mu at zero
        return sample_sphere_orthogonal(root.inv_sqrt[:, -1], rng)

    def sample_directions(self, root: HessianRoot, n: int, rng: np.random.Generator) -> np.ndarray:
        return sample_sphere_orthogonal_batch(root.inv_sqrt[:, -1], n, rng)

    def _finalize_play(self, played: np.ndarray) -> np.ndarray:
        drift = abs(played[-1] - 1.0)
        if drift > LIFT_TOLERANCE:
            logger.warning(f"⚠️ lifted play drifted off the slice by {drift:.3e}")
        played[-1] = 1.0
        return played


class ClassicScrible(BanditLearner):
    """SCRiBLe on K itself: ball barrier, full-sphere directions"""

    name = 'classic'

    def _make_barrier(self) -> BallBarrier:
        return BallBarrier(self.action_set, scale=self.params.scale)

    def _draw_direction(self, root: HessianRoot, rng: np.random.Generator) -> np.ndarray:
        return sample_sphere(self.action_set.dimension, rng)

    def sample_directions(self, root: HessianRoot, n: int, rng: np.random.Generator) -> np.ndarray:
        g = rng.standard_normal((n, self.action_set.dimension))
        return g / np.linalg.norm(g, axis=1, keepdims=True)


class IncreasingLrScrible(LiftedScrible):
    """
    Lifted SCRiBLe with eta_t = eta * kappa^m_t, where m_t counts the rounds in
    which ||x'_t - x'_{t-1}||_{x'_t} exceeded rho.

    Defaults: kappa = exp(1 / (d ln T)), rho = 2 d eta.
    """

    name = 'increasing_lr'

    def __init__(self, params: LearnerParams, kappa: Optional[float] = None, rho: Optional[float] = None):
        d, T = params.dimension, params.horizon
        self.kappa = kappa if kappa is not None else math.exp(1.0 / (d * math.log(max(T, 2))))
        self.rho = rho if rho is not None else 2.0 * d * params.eta
        if not self.kappa >= 1.0:
            raise InvalidArgumentError(f"kappa must be >= 1, got {self.kappa}")
        super().__init__(params)

    def reset(self):
        super().reset()
        self.increments = 0
        self.previous_iterate: Optional[np.ndarray] = None

    def learning_rate(self) -> float:
        return self.params.eta * self.kappa ** self.increments

    def _before_solve(self):
        current = self.state.iterate
        if self.previous_iterate is not None:
            moved = self.barrier.local_norm(current, current - self.previous_iterate)
            if moved > self.rho:
                self.increments += 1
        self.previous_iterate = current


ALGORITHMS: Dict[str, Type[BanditLearner]] = {
    LiftedScrible.name: LiftedScrible,
    ClassicScrible.name: ClassicScrible,
    IncreasingLrScrible.name: IncreasingLrScrible,
}


def make_learner(name: str, params: LearnerParams, **options) -> BanditLearner:
    if name not in ALGORITHMS:
        raise InvalidArgumentError(f"unknown algorithm '{name}' (expected one of {sorted(ALGORITHMS)})")
    cls = ALGORITHMS[name]
    if cls is IncreasingLrScrible:
        return cls(params, kappa=options.get('kappa'), rho=options.get('rho'))
    return cls(params)


def recommend(records: Sequence[RoundRecord]) -> np.ndarray:
    """Played point with the smallest observed loss; ties go to the earliest round"""
    if not records:
        raise InvalidArgumentError("recommend() needs at least one round record")
    best = min(range(len(records)), key=lambda i: (records[i].loss, i))
    return records[best].point.copy()
