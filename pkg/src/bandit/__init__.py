"""
Bandit learners for epsilon-approximately-linear losses on a ball.

Core pieces: the action set, the cone barrier, seeded sampling, the FTRL
subproblem solver, the learners themselves and the loss constructions.
"""

from .errors import (
    BanditError,
    BarrierDomainError,
    ConfigError,
    ConvergenceError,
    IllConditionedError,
    InvalidArgumentError,
    RoundError,
)

__all__ = [
    'BanditError',
    'BarrierDomainError',
    'ConfigError',
    'ConvergenceError',
    'IllConditionedError',
    'InvalidArgumentError',
    'RoundError',
]
