"""
Action set geometry: the radius-D ball K, its shrinkage K_delta and the
lifted slice {(x, 1)} used by the cone barrier.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InvalidArgumentError

MEMBERSHIP_TOLERANCE = 1e-12

ArrayLike = Union[np.ndarray, list, tuple]


def _frozen(x: ArrayLike) -> np.ndarray:
    arr = np.array(x, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BallActionSet:
    """
    Closed ball of radius D centered at the origin in R^d.

    The ball must contain the unit ball, so D >= 1.
    """
    dimension: int
    radius: float = 5.0

    def __post_init__(self):
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise InvalidArgumentError(f"dimension must be a positive integer, got {self.dimension}")
        if not self.radius >= 1.0:
            raise InvalidArgumentError(f"radius must be >= 1 (K contains the unit ball), got {self.radius}")

    def check_dimension(self, x: np.ndarray, name: str = "x") -> np.ndarray:
        arr = np.asarray(x, dtype=float)
        if arr.shape != (self.dimension,):
            raise InvalidArgumentError(
                f"{name} must have shape ({self.dimension},), got {arr.shape}"
            )
        return arr

    def contains(self, x: ArrayLike, tolerance: float = MEMBERSHIP_TOLERANCE) -> bool:
        return contains(self, x, tolerance)

    def shrink(self, delta: float) -> 'ShrunkSet':
        return ShrunkSet(self, delta)

    def sample_uniform(self, rng: np.random.Generator, n: int = 1) -> np.ndarray:
        """Draw n points uniformly from the ball; returns shape (n, d)"""
        g = rng.standard_normal((n, self.dimension))
        directions = g / np.linalg.norm(g, axis=1, keepdims=True)
        radii = self.radius * rng.random(n) ** (1.0 / self.dimension)
        return directions * radii[:, None]


@dataclass(frozen=True)
class ShrunkSet:
    """K_delta = {x : x / (1 - delta) in K}, i.e. the ball of radius (1 - delta) D"""
    parent: BallActionSet
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise InvalidArgumentError(f"delta must lie in (0, 1), got {self.delta}")

    @property
    def radius(self) -> float:
        return (1.0 - self.delta) * self.parent.radius

    def contains(self, x: ArrayLike, tolerance: float = MEMBERSHIP_TOLERANCE) -> bool:
        arr = self.parent.check_dimension(x)
        return bool(np.linalg.norm(arr) <= self.radius + tolerance)


@dataclass(frozen=True)
class LiftedPoint:
    """A point (x, 1) of the slice b = 1 of the cone over K"""
    spatial: np.ndarray
    last: float = 1.0

    def __post_init__(self):
        if self.last != 1.0:
            raise InvalidArgumentError(f"lifted point must have last coordinate 1, got {self.last}")
        object.__setattr__(self, 'spatial', _frozen(self.spatial))

    @property
    def dimension(self) -> int:
        return self.spatial.shape[0]

    @property
    def vector(self) -> np.ndarray:
        return np.append(self.spatial, 1.0)

    @classmethod
    def from_vector(cls, p: ArrayLike) -> 'LiftedPoint':
        """Build from a length d+1 vector; the last coordinate is forced to exactly 1"""
        arr = np.asarray(p, dtype=float)
        return cls(arr[:-1].copy())


def contains(action_set: BallActionSet, x: ArrayLike, tolerance: float = MEMBERSHIP_TOLERANCE) -> bool:
    """True iff ||x|| <= D up to an absolute tolerance on the norm"""
    arr = action_set.check_dimension(x)
    return bool(np.linalg.norm(arr) <= action_set.radius + tolerance)


def lift(x: ArrayLike) -> LiftedPoint:
    return LiftedPoint(np.asarray(x, dtype=float))


def drop_lift(point: Union[LiftedPoint, ArrayLike]) -> np.ndarray:
    if isinstance(point, LiftedPoint):
        return np.array(point.spatial)
    return np.asarray(point, dtype=float)[:-1].copy()


def linear_optimum(theta_sum: ArrayLike, action_set: BallActionSet) -> np.ndarray:
    """
    Minimizer of theta_sum . x over K.

    Returns -D * theta_sum / ||theta_sum||, or the center when theta_sum is zero
    (every point ties there).
    """
    s = action_set.check_dimension(theta_sum, "theta_sum")
    norm = np.linalg.norm(s)
    if norm == 0.0:
        return np.zeros(action_set.dimension)
    return -action_set.radius * s / norm
