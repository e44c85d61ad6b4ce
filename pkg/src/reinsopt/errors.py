"""Exception hierarchy for parameter, calibration, and configuration failures."""


class ReinsoptError(Exception):
    """Base class for all package-specific errors."""


class InvalidParams(ReinsoptError, ValueError):
    """A value violates a structural invariant (sign, ordering, domain)."""


class InfeasibleError(ReinsoptError, RuntimeError):
    """No admissible design exists for the requested inputs.

    ``stage`` names the failing step when a calibration has several
    (for example the shortfall solve versus the budget solve).
    """

    def __init__(self, message: str, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class ConfigError(ReinsoptError, ValueError):
    """A run-configuration file is malformed, incomplete, or inconsistent."""
