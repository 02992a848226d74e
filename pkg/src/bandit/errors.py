"""
Exception hierarchy shared by the library, the experiment harness and the CLI.
"""

from typing import Optional


class BanditError(Exception):
    """Base class for every error raised by this package"""


class InvalidArgumentError(BanditError, ValueError):
    """An argument is outside the domain an operation accepts"""


class BarrierDomainError(BanditError, ValueError):
    """A point lies on or outside the boundary of the barrier's cone"""

    def __init__(self, message: str, constraint: str):
        super().__init__(message)
        self.constraint = constraint


class IllConditionedError(BanditError, ArithmeticError):
    """The Hessian is numerically singular at the requested point"""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class ConvergenceError(BanditError, RuntimeError):
    """The FTRL solver hit its iteration cap without meeting tolerance"""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class RoundError(BanditError, RuntimeError):
    """A learner failed during a specific round of a run"""

    def __init__(self, round_index: int, cause: Exception):
        super().__init__(f"Round {round_index} failed: {type(cause).__name__}: {cause}")
        self.round_index = round_index


class ConfigError(BanditError, ValueError):
    """Configuration could not be parsed or names an unknown key"""

    def __init__(self, message: str, key: Optional[str] = None):
        super().__init__(message)
        self.key = key
