"""Exceptions shared across the simulator."""


class ConfigurationError(ValueError):
    """Scenario configuration is structurally invalid."""


class UnsupportedEventError(ValueError):
    """A perturbation event kind the environment cannot apply."""


class OrderingError(ValueError):
    """A state arrived out of slot order."""


class InstanceTooLargeError(ValueError):
    """Instance exceeds the exhaustive-search enumeration bounds."""
