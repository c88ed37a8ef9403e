"""Exception hierarchy shared across the package."""


class MRWError(Exception):
    """Base class for all mrwlab errors."""


class ModelValidationError(MRWError, ValueError):
    """A model definition violates the kernel contract (bad rows, off-lattice
    support, reducible chain, ...)."""


class ConfigError(MRWError, ValueError):
    """A run configuration is malformed or incomplete."""


class NonConvergenceError(MRWError, RuntimeError):
    """A truncated computation failed to reach the requested tolerance."""

    def __init__(self, message, details=None):
        super().__init__(message)
        self.details = dict(details or {})


class DivergenceGateError(NonConvergenceError):
    """Positive divergence of the walk is not established (stationary drift
    is not positive) and the caller did not override the gate."""
