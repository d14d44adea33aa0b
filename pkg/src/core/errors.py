"""
Error hierarchy for jcas-lab.

Every error carries the process exit code the command-line front end returns
when it escapes a subcommand:

    0  success
    1  file / checkpoint problems
    2  configuration, domain and precondition errors
    3  numerical failures (non-convergence, divergence, singular bounds)
"""


class JcasError(Exception):
    """Base class for all jcas-lab errors."""

    exit_code = 1


class ConfigurationError(JcasError, ValueError):
    """Invalid or unsupported configuration value."""

    exit_code = 2


class DomainError(JcasError, ValueError):
    """Argument outside the mathematical domain of a function."""

    exit_code = 2


class PreconditionError(JcasError, ValueError):
    """Input violates a documented precondition (e.g. non-Hermitian matrix)."""

    exit_code = 2


class ContractError(PreconditionError):
    """Array shapes do not match the declared layer or block layout."""


class NumericalError(JcasError, ArithmeticError):
    """A numerical routine failed to produce a trustworthy result."""

    exit_code = 3


class DegenerateSubspaceError(NumericalError):
    """A least-squares or subspace problem has no unique solution."""


class EstimationError(NumericalError):
    """An estimator was given data from which no estimate can be formed."""


class SingularityError(NumericalError):
    """A closed-form expression is evaluated at a singular point."""


class TrainingError(NumericalError):
    """Non-finite loss or gradient during optimization."""


class CalibrationError(JcasError):
    """Detection thresholds are required but have not been calibrated."""

    exit_code = 2


class CheckpointError(JcasError, OSError):
    """Checkpoint file missing, truncated or corrupted."""

    exit_code = 1


__all__ = [
    "JcasError",
    "ConfigurationError",
    "DomainError",
    "PreconditionError",
    "ContractError",
    "NumericalError",
    "DegenerateSubspaceError",
    "EstimationError",
    "SingularityError",
    "TrainingError",
    "CalibrationError",
    "CheckpointError",
]
