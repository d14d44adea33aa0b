"""
Complex linear algebra, special functions and random draws shared by every
other jcas-lab module.

Complex matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``
(the receive block Y, the sensing block Z_s and the auto-correlation matrix
all use this layout, rows = antennas).

Hermitian eigendecomposition:
    ``method="lapack"`` calls ``numpy.linalg.eigh``.
    ``method="jacobi"`` embeds A = Re A + j Im A into the real symmetric
    2K x 2K matrix [[Re A, -Im A], [Im A, Re A]] and diagonalizes it with
    cyclic Jacobi rotations. Every eigenvalue of A appears twice in the
    embedding; the duplicates (u; v) and (-v; u) both map to multiples of the
    same complex eigenvector u + jv, so K complex eigenvectors are recovered
    by pivoted Gram-Schmidt over the 2K candidates.

Chi-squared quantile:
    root of the regularized lower incomplete gamma function
    P(dof/2, t/2) = p, bracketed and solved with Brent's method. The upper
    tail is solved through Q = 1 - P so that p close to 1 keeps full
    precision.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammainc, gammaincc

from .errors import DegenerateSubspaceError, DomainError, NumericalError, PreconditionError
from .rng import RngLike, as_generator

logger = logging.getLogger(__name__)

ComplexMatrix = np.ndarray

HERMITIAN_ATOL = 1e-10
EIG_RESIDUAL_RTOL = 1e-8


@dataclass
class HermitianEig:
    """
    Eigendecomposition A = U diag(eigenvalues) U^H of a Hermitian matrix.

    Attributes:
        eigenvalues: real eigenvalues, sorted descending
        eigenvectors: (K, K) complex matrix, column i belongs to eigenvalues[i]
    """
    eigenvalues: np.ndarray
    eigenvectors: ComplexMatrix

    @property
    def dominant(self) -> np.ndarray:
        """Eigenvector of the largest eigenvalue."""
        return self.eigenvectors[:, 0]


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        return False
    return bool(np.all(np.abs(a - np.conj(np.swapaxes(a, -1, -2))) <= atol))


def assert_finite(a: np.ndarray, name: str) -> np.ndarray:
    """Raise ``NumericalError`` if ``a`` contains NaN or Inf."""
    if not np.all(np.isfinite(a)):
        raise NumericalError(f"{name} contains non-finite entries")
    return a


def _jacobi_symmetric(
    b: np.ndarray,
    tol: float,
    max_sweeps: int
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Cyclic Jacobi diagonalization of a real symmetric matrix."""
    b = np.array(b, dtype=np.float64, copy=True)
    n = b.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(b)
    if scale == 0.0:
        return np.zeros(n), v, 0

    tiny = 1e-18 * scale

    def off_norm() -> float:
        return float(np.sqrt(2.0 * np.sum(np.tril(b, -1) ** 2)))

    for sweep in range(max_sweeps):
        if off_norm() <= tol * scale:
            return np.diag(b).copy(), v, sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                bpq = b[p, q]
                if abs(bpq) <= tiny:
                    b[p, q] = 0.0
                    b[q, p] = 0.0
                    continue
                theta = (b[q, q] - b[p, p]) / (2.0 * bpq)
                if theta == 0.0:
                    t = 1.0
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                idx = [p, q]
                b[:, idx] = b[:, idx] @ rot
                b[idx, :] = rot.T @ b[idx, :]
                b[p, q] = 0.0
                b[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot

    residual = off_norm()
    if residual <= tol * scale:
        return np.diag(b).copy(), v, max_sweeps
    raise NumericalError(
        f"Jacobi iteration did not converge after {max_sweeps} sweeps "
        f"(off-diagonal residual {residual:.3e}, target {tol * scale:.3e})"
    )


def _complex_from_embedding(w: np.ndarray, vecs: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Recover K complex eigenpairs from the 2K real eigenpairs of the embedding."""
    order = np.argsort(-w, kind="stable")
    w = w[order]
    candidates = vecs[:k, order] + 1j * vecs[k:, order]

    residuals = candidates.copy()
    chosen = np.zeros(2 * k, dtype=bool)
    values = []
    columns = []
    for _ in range(k):
        norms = np.linalg.norm(residuals, axis=0)
        norms[chosen] = -1.0
        i = int(np.argmax(norms))
        u = residuals[:, i] / norms[i]
        chosen[i] = True
        values.append(w[i])
        columns.append(u)
        residuals = residuals - np.outer(u, u.conj() @ residuals)

    values = np.asarray(values)
    columns = np.stack(columns, axis=1)
    order = np.argsort(-values, kind="stable")
    return values[order], columns[:, order]


def _check_eig(a: np.ndarray, values: np.ndarray, vectors: np.ndarray) -> None:
    norm = np.linalg.norm(a, 2) if a.size else 0.0
    residual = np.linalg.norm(a @ vectors - vectors * values[np.newaxis, :], axis=0).max()
    if residual > EIG_RESIDUAL_RTOL * norm + 1e-300:
        raise NumericalError(
            f"Eigenpair residual {residual:.3e} exceeds {EIG_RESIDUAL_RTOL:.0e} * ||A|| = "
            f"{EIG_RESIDUAL_RTOL * norm:.3e}"
        )
    gram = vectors.conj().T @ vectors
    orthogonality = np.abs(gram - np.eye(vectors.shape[1])).max()
    if orthogonality > EIG_RESIDUAL_RTOL:
        raise NumericalError(f"Eigenvectors lost orthogonality ({orthogonality:.3e})")


def hermitian_eig(
    a: ComplexMatrix,
    method: str = "lapack",
    tol: float = 1e-15,
    max_sweeps: int = 60
) -> HermitianEig:
    """
    Eigendecomposition of a Hermitian K x K matrix, eigenvalues descending.

    Args:
        a: Hermitian matrix (checked elementwise to 1e-10)
        method: "lapack" (numpy.linalg.eigh) or "jacobi" (real embedding)
        tol: Jacobi stopping threshold on off(B) / ||B||_F
        max_sweeps: Jacobi sweep cap

    Returns:
        HermitianEig with unit-norm, mutually orthogonal eigenvector columns

    Raises:
        PreconditionError: a is not square Hermitian
        NumericalError: no convergence, or the residual check fails
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PreconditionError(f"Expected a square K x K matrix with K >= 1, got shape {a.shape}")
    if not is_hermitian(a):
        raise PreconditionError("Matrix is not Hermitian within 1e-10")
    k = a.shape[0]

    if method == "lapack":
        values, vectors = np.linalg.eigh(a)
        values, vectors = values[::-1].copy(), vectors[:, ::-1].copy()
    elif method == "jacobi":
        embedding = np.block([[a.real, -a.imag], [a.imag, a.real]])
        embedding = 0.5 * (embedding + embedding.T)
        w, vecs, sweeps = _jacobi_symmetric(embedding, tol, max_sweeps)
        logger.debug(f"Jacobi converged after {sweeps} sweeps (K={k})")
        values, vectors = _complex_from_embedding(w, vecs, k)
    else:
        raise ValueError(f"Unknown eigensolver method: {method}")

    _check_eig(a, values, vectors)
    return HermitianEig(eigenvalues=values, eigenvectors=vectors)


def hermitian_eig_batch(a: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Stacked eigendecomposition of (B, K, K) Hermitian matrices.

    Returns eigenvalues (B, K) and eigenvectors (B, K, K), both ordered with
    the largest eigenvalue first.
    """
    values, vectors = np.linalg.eigh(np.asarray(a, dtype=np.complex128))
    return values[:, ::-1], vectors[:, :, ::-1]


def chi2_cdf(t: Union[float, np.ndarray], dof: int) -> Union[float, np.ndarray]:
    """CDF of the chi-squared distribution with ``dof`` degrees of freedom."""
    return gammainc(dof / 2.0, np.maximum(t, 0.0) / 2.0)


def chi2_quantile(dof: int, p: float) -> float:
    """
    Inverse CDF of the chi-squared distribution.

    Args:
        dof: degrees of freedom (positive integer)
        p: probability in [0, 1)

    Returns:
        t with CDF(t) = p; 0 for p = 0

    Raises:
        DomainError: p outside [0, 1) or dof < 1
    """
    if not (0.0 <= p < 1.0):
        raise DomainError(f"Probability must lie in [0, 1), got {p}")
    if int(dof) != dof or dof < 1:
        raise DomainError(f"Degrees of freedom must be a positive integer, got {dof}")
    if p == 0.0:
        return 0.0

    shape = dof / 2.0
    if p <= 0.5:
        def excess(t: float) -> float:
            return gammainc(shape, t / 2.0) - p
    else:
        tail = 1.0 - p

        def excess(t: float) -> float:
            return tail - gammaincc(shape, t / 2.0)

    upper = float(max(dof, 2))
    while excess(upper) < 0.0:
        upper *= 2.0
    return float(brentq(excess, 0.0, upper, xtol=1e-14, rtol=4.0 * np.finfo(float).eps, maxiter=500))


def sample_complex_normal(
    rng: RngLike,
    variance: float,
    size: Optional[Union[int, Tuple[int, ...]]] = None
) -> Union[complex, np.ndarray]:
    """
    Circularly symmetric complex normal draws CN(0, variance).

    Real and imaginary parts are independent N(0, variance / 2). With
    ``size=None`` a Python complex is returned.
    """
    if variance < 0:
        raise DomainError(f"Variance must be non-negative, got {variance}")
    generator = as_generator(rng)
    scale = np.sqrt(variance / 2.0)
    real = generator.standard_normal(size)
    imag = generator.standard_normal(size)
    draw = scale * (real + 1j * imag)
    if size is None:
        return complex(draw)
    return draw


def least_squares_1d(a: np.ndarray, b: np.ndarray) -> complex:
    """
    Scalar least-squares solution psi = argmin ||a psi - b||^2 = (a^H b) / (a^H a).

    Raises:
        DegenerateSubspaceError: a is the zero vector
        PreconditionError: length mismatch
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.shape != b.shape:
        raise PreconditionError(f"Length mismatch: {a.shape[0]} vs {b.shape[0]}")
    energy = float(np.real(np.vdot(a, a)))
    if energy <= 0.0:
        raise DegenerateSubspaceError("Least-squares regressor is the zero vector")
    return complex(np.vdot(a, b) / energy)


__all__ = [
    "ComplexMatrix",
    "HermitianEig",
    "is_hermitian",
    "assert_finite",
    "hermitian_eig",
    "hermitian_eig_batch",
    "chi2_cdf",
    "chi2_quantile",
    "sample_complex_normal",
    "least_squares_1d",
]
