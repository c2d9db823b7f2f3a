"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: a distribution, geometry payload or instance file."""


class ResourceLimitError(RuntimeError):
    """A configured work cap such as the cut or subset limit was exceeded."""


class InfeasibleError(RuntimeError):
    """No scaling guess produced a feasible relaxation."""


class InternalConsistencyError(AssertionError):
    """A quantity that must hold by construction was violated (upstream bug)."""
