class SkewlabError(Exception):
    """Base class for errors raised by skewlab."""


class ConfigError(SkewlabError, ValueError):
    """Invalid system or experiment description."""


class AssumptionError(SkewlabError):
    """A standing hypothesis required by an operation does not hold."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class ConvergenceError(SkewlabError, ArithmeticError):
    """An iterative numerical procedure failed to converge."""


class NodeCapError(SkewlabError, MemoryError):
    """A curve refinement would exceed the configured node cap."""
