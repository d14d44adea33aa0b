"""
Least-squares ESPRIT for a single source on a half-wavelength ULA.

The two maximally overlapping subarrays (antennas 1..K-1 and 2..K) see the
same signal subspace rotated by psi = exp(j pi sin(theta)). With the signal
subspace fixed to rank one (at most one target), psi is the scalar
least-squares solution between the shifted halves of the dominant
eigenvector, and theta = arcsin(arg(psi) / pi).
"""

import logging
from dataclasses import dataclass

import numpy as np

from ..core.errors import DegenerateSubspaceError, EstimationError, PreconditionError
from ..core.numerics import hermitian_eig, hermitian_eig_batch, least_squares_1d

logger = logging.getLogger(__name__)

LOW_CONFIDENCE_RATIO = 1.0 + 1e-6


@dataclass(frozen=True)
class EspritEstimate:
    """
    Attributes:
        angle: estimated AoA (rad) in [-pi/2, pi/2]
        eigen_ratio: lambda_1 / lambda_2 (inf when lambda_2 = 0)
        low_confidence: the dominant eigenvalue is not separated from the next
    """
    angle: float
    eigen_ratio: float
    low_confidence: bool


def _angle_from_rotation(psi: np.ndarray) -> np.ndarray:
    return np.arcsin(np.clip(np.angle(psi) / np.pi, -1.0, 1.0))


def _eigen_ratio(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(second > 0, first / np.where(second > 0, second, 1.0), np.inf)


def esprit_aoa(corr: np.ndarray, method: str = "lapack") -> EspritEstimate:
    """
    Estimate the angle of a single source from a K x K correlation matrix.

    Args:
        corr: Hermitian PSD correlation matrix, K >= 2
        method: eigensolver passed to ``hermitian_eig``

    Raises:
        EstimationError: zero correlation matrix
        PreconditionError: K < 2 or not Hermitian
    """
    corr = np.asarray(corr, dtype=np.complex128)
    if corr.ndim != 2 or corr.shape[0] < 2:
        raise PreconditionError(f"ESPRIT needs a K x K matrix with K >= 2, got {corr.shape}")
    if not np.any(corr):
        raise EstimationError("Correlation matrix is zero; no angle can be estimated")

    eig = hermitian_eig(corr, method=method)
    u = eig.dominant
    ratio = float(_eigen_ratio(eig.eigenvalues[0], eig.eigenvalues[1]))
    low = ratio < LOW_CONFIDENCE_RATIO
    try:
        psi = least_squares_1d(u[:-1], u[1:])
    except DegenerateSubspaceError:
        if not low:
            raise
        # Eigenvector confined to the last antenna: no phase progression.
        psi = 1.0 + 0.0j
    angle = float(_angle_from_rotation(np.asarray(psi)))
    if low:
        logger.warning(f"ESPRIT spectrum degenerate (lambda1/lambda2 = {ratio:.9f})")
    return EspritEstimate(angle=angle, eigen_ratio=ratio, low_confidence=low)


def esprit_aoa_batch(corr: np.ndarray) -> np.ndarray:
    """
    Angles for a stack of correlation matrices (B, K, K).

    Zero matrices yield NaN; callers treat them as missing estimates.
    """
    corr = np.asarray(corr, dtype=np.complex128)
    _, vectors = hermitian_eig_batch(corr)
    u = vectors[:, :, 0]
    lower, upper = u[:, :-1], u[:, 1:]
    energy = np.sum(np.abs(lower) ** 2, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = np.sum(lower.conj() * upper, axis=1) / energy
    angles = _angle_from_rotation(psi)
    zero = ~np.any(corr.reshape(corr.shape[0], -1), axis=1)
    angles[zero | (energy <= 0)] = np.nan
    return angles


__all__ = ["EspritEstimate", "esprit_aoa", "esprit_aoa_batch", "LOW_CONFIDENCE_RATIO"]
