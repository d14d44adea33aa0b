"""
MMSE equalization, exact soft demapping and bit-wise mutual information.

Sign convention: a positive LLR means bit 0 is the more likely value,
L_i = ln P(b_i = 0 | z) - ln P(b_i = 1 | z).
"""

from typing import Optional, Union

import numpy as np
from scipy.special import erfc, logsumexp

from ..core.errors import ContractError, DomainError
from ..physics.waveform import Constellation

ArrayOrScalar = Union[complex, np.ndarray]


def mmse_equalize(z: ArrayOrScalar, kappa: ArrayOrScalar, noise_power: float) -> ArrayOrScalar:
    """
    Single-tap MMSE equalizer kappa* z / (|kappa|^2 + sigma_n^2).

    kappa = 0 yields 0. With sigma_n^2 = 0 this is zero forcing.
    """
    z = np.asarray(z, dtype=np.complex128)
    kappa = np.asarray(kappa, dtype=np.complex128)
    denom = np.abs(kappa) ** 2 + noise_power
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(denom > 0, np.conj(kappa) * z / np.where(denom > 0, denom, 1.0), 0.0)
    if out.ndim == 0:
        return complex(out)
    return out


def exact_llr(
    z_eq: ArrayOrScalar,
    kappa: ArrayOrScalar,
    noise_power: Union[float, np.ndarray],
    constellation: Constellation
) -> np.ndarray:
    """
    Log-MAP bit LLRs on the model z = kappa x + n, n ~ CN(0, sigma_n^2).

    The equalized sample is mapped back to the received sample
    z = z_eq (|kappa|^2 + sigma_n^2) / kappa*, then
    L_i = logsumexp_{x: b_i=0} (-|z - kappa x|^2 / sigma_n^2)
        - logsumexp_{x: b_i=1} (-|z - kappa x|^2 / sigma_n^2).

    Args:
        z_eq: equalized sample(s), shape () or (N,)
        kappa: effective channel gain(s), same shape
        noise_power: sigma_n^2 > 0 (scalar or per sample)
        constellation: bit-labelled constellation

    Returns:
        (n,) for scalar input, else (N, n)

    Raises:
        DomainError: sigma_n^2 <= 0
    """
    noise_power = np.asarray(noise_power, dtype=np.float64)
    if np.any(noise_power <= 0):
        raise DomainError("Exact LLRs need a positive noise power")
    z_eq = np.asarray(z_eq, dtype=np.complex128)
    kappa = np.asarray(kappa, dtype=np.complex128)
    scalar = z_eq.ndim == 0
    z_eq, kappa = np.atleast_1d(z_eq), np.atleast_1d(kappa)
    noise = np.broadcast_to(noise_power, z_eq.shape)

    denom = np.abs(kappa) ** 2 + noise
    nonzero = kappa != 0
    z = np.where(nonzero, z_eq * denom / np.where(nonzero, np.conj(kappa), 1.0), 0.0)

    points = constellation.points
    metric = -np.abs(z[:, np.newaxis] - kappa[:, np.newaxis] * points[np.newaxis, :]) ** 2
    metric /= noise[:, np.newaxis]

    labels = constellation.labels.astype(bool)
    llrs = np.empty((z.shape[0], constellation.bits_per_symbol))
    for i in range(constellation.bits_per_symbol):
        ones = labels[:, i]
        llrs[:, i] = logsumexp(metric[:, ~ones], axis=1) - logsumexp(metric[:, ones], axis=1)
    return llrs[0] if scalar else llrs


def hard_decision(llrs: np.ndarray) -> np.ndarray:
    """Bits from LLRs; L >= 0 decides bit 0."""
    return (np.asarray(llrs) < 0).astype(np.uint8)


def bmi_estimate(llrs: np.ndarray, bits: np.ndarray, bits_per_symbol: Optional[int] = None) -> float:
    """
    Bit-wise mutual information in bits per symbol.

        BMI = n - (1/N) sum_{i,n} log2(1 + exp(-(1 - 2 b) L))

    ``llrs`` and ``bits`` are laid out n x N (bit index first) unless
    ``bits_per_symbol`` says otherwise; the result is clamped to [0, n].
    """
    llrs = np.asarray(llrs, dtype=np.float64)
    bits = np.asarray(bits)
    if llrs.shape != bits.shape:
        raise ContractError(f"LLR shape {llrs.shape} does not match bit shape {bits.shape}")
    n = llrs.shape[0] if bits_per_symbol is None else bits_per_symbol
    n_symbols = llrs.size / n
    sign = 1.0 - 2.0 * bits
    bce_bits = np.sum(np.logaddexp(0.0, -sign * llrs)) / np.log(2.0)
    return float(np.clip(n - bce_bits / n_symbols, 0.0, n))


def qam_ber_awgn(order: int, snr: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Exact BER of Gray-coded square M-QAM over AWGN at SNR = Es / N0.

    Per-axis bit k of the sqrt(M)-PAM component contributes
    (1/sqrt(M)) sum_i (-1)^floor(i 2^(k-1) / sqrt(M))
        (2^(k-1) - floor(i 2^(k-1) / sqrt(M) + 1/2)) erfc((2i + 1) sqrt(3 SNR / (2 (M - 1))))
    and the BER is the mean over the log2(sqrt(M)) bit positions.
    """
    side = int(round(np.sqrt(order)))
    if side * side != order or order < 4:
        raise DomainError(f"Closed-form BER needs a square QAM order, got {order}")
    levels = int(np.log2(side))
    snr = np.asarray(snr, dtype=np.float64)
    scale = np.sqrt(3.0 * snr / (2.0 * (order - 1)))
    total = np.zeros_like(scale)
    for k in range(1, levels + 1):
        weight = 2 ** (k - 1)
        for i in range(int((1 - 2.0 ** (-k)) * side)):
            sign = (-1) ** int(i * weight / side)
            mult = weight - int(np.floor(i * weight / side + 0.5))
            total = total + sign * mult * erfc((2 * i + 1) * scale)
    ber = total / (side * levels)
    if ber.ndim == 0:
        return float(ber)
    return ber


__all__ = [
    "mmse_equalize",
    "exact_llr",
    "hard_decision",
    "bmi_estimate",
    "qam_ber_awgn",
]
