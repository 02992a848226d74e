"""
Loss constructions: oblivious linear sequences, bounded perturbation rules
applied after the action is seen, and the spike oracle behind the 2*epsilon
lower bound.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from .errors import InvalidArgumentError
from .geometry import BallActionSet

logger = logging.getLogger(__name__)

COLLISION_TOLERANCE = 1e-12
NORMALIZATION_SLACK = 1e-9


@dataclass(frozen=True)
class LinearSequence:
    """Linear loss vectors theta_1..theta_T, fixed before the game, each with norm <= G"""
    theta: np.ndarray
    G: float

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.ndim != 2:
            raise InvalidArgumentError(f"theta must be a (T, d) array, got shape {theta.shape}")
        norms = np.linalg.norm(theta, axis=1)
        if theta.shape[0] and norms.max() > self.G * (1.0 + 1e-12):
            raise InvalidArgumentError(f"theta norm {norms.max():.6g} exceeds G = {self.G}")
        theta.setflags(write=False)
        object.__setattr__(self, 'theta', theta)

    @property
    def horizon(self) -> int:
        return self.theta.shape[0]

    @property
    def dimension(self) -> int:
        return self.theta.shape[1]

    def cumulative(self) -> np.ndarray:
        return self.theta.sum(axis=0)


class PerturbationKind(str, Enum):
    ZERO = 'zero'
    SINUSOIDAL = 'sinusoidal'
    CONSTANT_SIGN = 'constant-sign'
    ADVERSARIAL_SIGN = 'adversarial-sign'


@dataclass(frozen=True)
class PerturbationRule:
    """sigma(y) with |sigma| <= epsilon; `direction` is the vector l of the sinusoidal rule"""
    kind: PerturbationKind
    epsilon: float
    direction: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', PerturbationKind(self.kind))
        if not 0.0 <= self.epsilon < 1.0:
            raise InvalidArgumentError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if self.kind is PerturbationKind.SINUSOIDAL and self.direction is None:
            raise InvalidArgumentError("the sinusoidal rule needs a direction vector l")


def sinusoidal_direction(action_set: BallActionSet, rng: np.random.Generator) -> np.ndarray:
    """l with entries uniform in [-1/(D sqrt d), 1/(D sqrt d)], so |y . l| <= 1 on K"""
    bound = 1.0 / (action_set.radius * math.sqrt(action_set.dimension))
    return rng.uniform(-bound, bound, size=action_set.dimension)


def make_rule(kind: str, epsilon: float, action_set: BallActionSet,
              rng: Optional[np.random.Generator] = None) -> PerturbationRule:
    kind = PerturbationKind(kind)
    direction = None
    if kind is PerturbationKind.SINUSOIDAL:
        if rng is None:
            raise InvalidArgumentError("a generator is needed to draw the sinusoidal direction")
        direction = sinusoidal_direction(action_set, rng)
    return PerturbationRule(kind, epsilon, direction)


def gen_oblivious(horizon: int, dimension: int, G: float, rng: np.random.Generator) -> LinearSequence:
    """Uniform directions scaled by radii uniform in [0, G], drawn up front"""
    if horizon < 1:
        raise InvalidArgumentError(f"T must be >= 1, got {horizon}")
    g = rng.standard_normal((horizon, dimension))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    radii = G * rng.random((horizon, 1))
    return LinearSequence(g / norms * radii, G)


def perturb(rule: PerturbationRule, y: np.ndarray, t: int, theta_t: np.ndarray) -> float:
    """Perturbation sigma_t(y), chosen after y is seen"""
    eps = rule.epsilon
    if rule.kind is PerturbationKind.ZERO or eps == 0.0:
        return 0.0
    if rule.kind is PerturbationKind.SINUSOIDAL:
        return eps * math.sin(float(y @ rule.direction) * math.pi)
    if rule.kind is PerturbationKind.CONSTANT_SIGN:
        return eps
    # worst-case flavored: push against the linear part measured from the center
    return eps * float(np.sign(theta_t @ y))


def loss(sequence: LinearSequence, rule: PerturbationRule, t: int, y: np.ndarray) -> float:
    """
    f_t(y) = theta_t . y + sigma_t(y) for 1-based round t.

    Values above 1 in magnitude are allowed but logged at debug level; the
    harness reports the realized maximum.
    """
    if not 1 <= t <= sequence.horizon:
        raise InvalidArgumentError(f"round {t} out of range 1..{sequence.horizon}")
    theta_t = sequence.theta[t - 1]
    value = float(theta_t @ y) + perturb(rule, y, t, theta_t)
    if abs(value) > 1.0 + NORMALIZATION_SLACK:
        logger.debug(f"|f_{t}(y)| = {abs(value):.4g} exceeds 1")
    return value


@dataclass
class SpikeOracle:
    """
    Black-box oracle answering epsilon everywhere except at a hidden point z,
    where it answers -epsilon. z is resolved only after the run, as a point
    never queried.
    """
    epsilon: float
    queries: List[np.ndarray] = field(default_factory=list)
    hidden_point: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise InvalidArgumentError(f"epsilon must lie in [0, 1), got {self.epsilon}")

    def value(self, x: np.ndarray) -> float:
        if self.hidden_point is not None and np.linalg.norm(np.asarray(x) - self.hidden_point) <= COLLISION_TOLERANCE:
            return -self.epsilon
        return self.epsilon


def spike_query(oracle: SpikeOracle, x: np.ndarray) -> float:
    oracle.queries.append(np.array(x, dtype=float))
    return oracle.epsilon


def _collides(z: np.ndarray, points: List[np.ndarray]) -> bool:
    return any(np.linalg.norm(z - p) <= COLLISION_TOLERANCE for p in points)


def spike_gap(oracle: SpikeOracle, x_hat: np.ndarray, action_set: BallActionSet,
              rng: np.random.Generator) -> float:
    """
    Resolve the hidden point away from every query and x_hat, then return
    f(x_hat) - min f = epsilon - (-epsilon).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    avoid = oracle.queries + [x_hat]
    while True:
        z = action_set.sample_uniform(rng, 1)[0]
        if not _collides(z, avoid):
            break
    oracle.hidden_point = z
    return oracle.value(x_hat) - oracle.value(z)
