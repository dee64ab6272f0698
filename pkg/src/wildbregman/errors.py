"""Exception types shared across the package."""


class RejectedInputError(ValueError):
    """An argument violates a documented precondition (domain, shape, range)."""


class ConvergenceError(RuntimeError):
    """An iterative fit failed to reach its stationarity target.

    Carries the last iterate and diagnostics so callers can inspect what went
    wrong instead of silently accepting a bad solution.
    """

    def __init__(self, message, last_iterate=None, grad_norm=None, trace=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.grad_norm = grad_norm
        self.trace = trace


class CalibrationError(RuntimeError):
    """Noise-scale calibration could not bracket or hit the target radius."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class UnboundedRadiusError(RuntimeError):
    """No radius on the search grid satisfied the fixed-point condition."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class UnsupportedConfigurationError(ValueError):
    """A configuration is outside what this implementation supports."""
