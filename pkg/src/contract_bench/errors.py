"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameters, unknown kinds, or inconsistent inputs."""


class InjectivityError(ConfigurationError):
    """A singular value vanished where the operator must be injective."""


class SamplingError(RuntimeError):
    """Too few draws to resolve the requested functional."""


class NumericalError(RuntimeError):
    """A numerical routine failed to converge."""
