"""Exception hierarchy shared by every module.

Each class carries the process exit code the CLI maps it to, so command
wrappers never need a lookup table.
"""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DOMAIN = 3
EXIT_SIM_ABORT = 4


class GyroError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(GyroError):
    """Malformed input: bad schema, unknown key, wrong type, bad config."""

    exit_code = EXIT_VALIDATION


class DomainError(GyroError):
    """Structurally valid input outside the model's physical domain."""

    exit_code = EXIT_DOMAIN


class StabilityError(DomainError):
    """Requested operating point has no stable equilibrium."""


class SimulationAbort(GyroError):
    """Time-domain integration aborted (blow-up or too many failed trials)."""

    exit_code = EXIT_SIM_ABORT
