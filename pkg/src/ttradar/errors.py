"""Exception types shared across the package."""


class TTRadarError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(TTRadarError, ValueError):
    """An argument violates a documented precondition (shape, range, ...)."""


class NumericFailureError(TTRadarError, RuntimeError):
    """A numerical routine failed to converge or produced unusable output.

    Attributes
    ----------
    iterations : int or None
        Iteration/sweep count at the point of failure, when meaningful.
    """

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class ScenarioError(TTRadarError, ValueError):
    """A simulation scenario is physically invalid (aliasing, bad config)."""


class IngestError(TTRadarError, ValueError):
    """Raw ADC capture could not be parsed.

    Attributes
    ----------
    byte_offset : int or None
        Offset into the raw file where the problem was detected.
    """

    def __init__(self, message, byte_offset=None):
        super().__init__(message)
        self.byte_offset = byte_offset
