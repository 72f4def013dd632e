"""Exception types raised across the package."""


class RewardDistanceError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RewardDistanceError, ValueError):
    """Malformed input: bad shapes, invalid probabilities, non-finite values."""


class DimensionError(ValidationError):
    """Array shapes are incompatible."""


class DegenerateError(RewardDistanceError, ValueError):
    """A quantity required to be non-constant (or of nonzero norm) is degenerate.

    Attributes:
        argument: Name of the offending argument or reward, if known.
    """

    def __init__(self, message: str, argument: str | None = None):
        super().__init__(message)
        self.argument = argument


class InsufficientDataError(RewardDistanceError, ValueError):
    """Too few samples (or successful seeds) to form an estimate."""


class ConvergenceError(RewardDistanceError, RuntimeError):
    """An iterative solver did not converge within its budget."""


class NonFiniteRewardError(RewardDistanceError, FloatingPointError):
    """A reward evaluator produced NaN or infinite values.

    Attributes:
        index: Position in the evaluated batch of the first offending value.
    """

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index
