"""Exception hierarchy shared across the package.

The CLI maps these onto distinct exit codes, so keep the split stable:
configuration/input problems, physical-domain violations, infeasible or
unsafe outcomes of an otherwise valid run.
"""


class ConfigError(Exception):
    """Bad configuration file, CLI argument, or malformed input data."""


class StepSizeError(ConfigError):
    """Integration step too large for the fastest time constant involved."""


class DomainError(ValueError):
    """Physical input outside the model's domain (e.g. non-positive wind speed)."""


class UnsupportedRegimeError(DomainError):
    """Parameter set leaves the regime the closed-form expressions assume."""


class ProbeTooLargeError(ValueError):
    """Finite-difference probe not small relative to the base disturbance."""


class IntegrationBlowupError(RuntimeError):
    """State left the physically meaningful region during integration."""


class RotorSecurityError(RuntimeError):
    """Rotor speed fell below the minimum allowable limit.

    Raised either when a requested speed excursion exceeds the available
    margin, or when a simulated rotor actually breaches the floor. In the
    latter case `unit`, `time_s` and `omega_r` identify the breach.
    """

    def __init__(self, message: str, unit: str | None = None,
                 time_s: float | None = None, omega_r: float | None = None):
        super().__init__(message)
        self.unit = unit
        self.time_s = time_s
        self.omega_r = omega_r
