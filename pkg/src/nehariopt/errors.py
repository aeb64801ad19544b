"""Exception types raised by the solver library."""


class NehariError(Exception):
    """Base class for all library-specific errors."""


class ZeroField(NehariError):
    """A nonzero field was required but an (effectively) zero field was given."""


class DegenerateInteraction(NehariError):
    """The quartic interaction term vanishes, so the manifold scaling is undefined."""


class DegenerateConstraintGradient(NehariError):
    """The constraint gradient is numerically zero; the tangent projection is undefined."""


class LineSearchFailed(NehariError):
    """The backtracking search exhausted its budget without satisfying the decrease condition."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(NehariError):
    """A run configuration is malformed or violates an option constraint."""
