"""
Numerical foundations shared by every jcas-lab module.

Modules:
--------
- errors: exception hierarchy carrying CLI exit codes
- rng: seeded, splittable Philox streams
- numerics: Hermitian eigendecomposition, chi-squared quantile, complex
  normal draws, scalar least squares
"""

from .errors import (
    CalibrationError,
    CheckpointError,
    ConfigurationError,
    ContractError,
    DegenerateSubspaceError,
    DomainError,
    EstimationError,
    JcasError,
    NumericalError,
    PreconditionError,
    SingularityError,
    TrainingError,
)
from .numerics import (
    HermitianEig,
    chi2_cdf,
    chi2_quantile,
    hermitian_eig,
    hermitian_eig_batch,
    least_squares_1d,
    sample_complex_normal,
)
from .rng import RngLike, SeededRng, as_generator

__all__ = [
    "CalibrationError",
    "CheckpointError",
    "ConfigurationError",
    "ContractError",
    "DegenerateSubspaceError",
    "DomainError",
    "EstimationError",
    "JcasError",
    "NumericalError",
    "PreconditionError",
    "SingularityError",
    "TrainingError",
    "HermitianEig",
    "chi2_cdf",
    "chi2_quantile",
    "hermitian_eig",
    "hermitian_eig_batch",
    "least_squares_1d",
    "sample_complex_normal",
    "RngLike",
    "SeededRng",
    "as_generator",
]
