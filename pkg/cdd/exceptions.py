"""Custom exceptions for the cdd package."""

from typing import Optional


class CddError(Exception):
    """Base exception for all cdd errors."""
    pass


class InvalidArgumentError(CddError, ValueError):
    """Raised when an argument violates an operation's precondition."""
    pass


class CloudParseError(CddError):
    """Raised when a point cloud, grid or distribution file cannot be parsed.

    Attributes:
        path: File that failed to parse (None for in-memory text).
        line: 1-based line number of the offending line.
    """

    def __init__(self, reason: str, line: int, path: Optional[str] = None):
        self.reason = reason
        self.line = line
        self.path = path
        where = f"{path}:{line}" if path else f"line {line}"
        super().__init__(f"{where}: {reason}")


class WeightDomainError(CddError, ValueError):
    """Raised when a weighting function is evaluated or built outside its domain."""
    pass


class UnknownWeightingError(CddError):
    """Raised when a weighting function kind is not one of the eight known kinds."""
    pass


class DivergenceError(CddError):
    """Raised when training produces a non-finite loss or gradient.

    Attributes:
        iteration: Iteration at which the non-finite value appeared.
    """

    def __init__(self, iteration: int, what: str):
        self.iteration = iteration
        super().__init__(f"training diverged at iteration {iteration}: {what} is not finite")


class UsageError(CddError):
    """Raised when the command-line surface is misused in a way argparse cannot see."""
    pass
