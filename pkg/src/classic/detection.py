"""
Neyman-Pearson power detector.

Under H0 every entry of Z_s is CN(0, sigma_ns^2), so

    t = (2 / sigma_ns^2) * sum_{l,i} |z_il|^2  ~  chi^2 with 2 K N_win dof

and comparing t against the (1 - P_f) quantile of that distribution keeps
the false-alarm rate at P_f for every window length and noise level. A
statistic equal to the threshold counts as a detection.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from ..core.errors import DomainError
from ..core.numerics import chi2_quantile


@dataclass(frozen=True)
class DetectionDecision:
    """
    Attributes:
        detected: statistic >= threshold
        statistic: power statistic t
        threshold: chi-squared quantile
    """
    detected: bool
    statistic: float
    threshold: float


@lru_cache(maxsize=1024)
def np_threshold(antennas: int, n_win: int, p_f: float) -> float:
    """Threshold chi2_quantile(2 K N_win, 1 - P_f)."""
    if not 0.0 < p_f <= 1.0:
        raise DomainError(f"False-alarm probability must lie in (0, 1], got {p_f}")
    return chi2_quantile(2 * antennas * n_win, 1.0 - p_f)


def np_statistic(z: np.ndarray, noise_power: float) -> float:
    """(2 / sigma_ns^2) times the block energy."""
    if noise_power <= 0:
        raise DomainError(f"Noise power must be positive, got {noise_power}")
    return float(2.0 / noise_power * np.sum(np.abs(z) ** 2))


def np_detect(z: np.ndarray, noise_power: float, p_f: float) -> DetectionDecision:
    """
    Power detection on one K x N_win block.

    Args:
        z: received sensing block
        noise_power: sigma_ns^2 > 0
        p_f: target false-alarm probability
    """
    z = np.asarray(z)
    k, n_win = z.shape
    statistic = np_statistic(z, noise_power)
    threshold = np_threshold(int(k), int(n_win), float(p_f))
    return DetectionDecision(
        detected=statistic >= threshold,
        statistic=statistic,
        threshold=threshold,
    )


def np_statistic_batch(z: np.ndarray, noise_power: Union[float, np.ndarray]) -> np.ndarray:
    """Statistics for zero-padded blocks (B, K, N_max)."""
    noise_power = np.broadcast_to(np.asarray(noise_power, dtype=np.float64), (z.shape[0],))
    if np.any(noise_power <= 0):
        raise DomainError("Noise power must be positive")
    return 2.0 / noise_power * np.sum(np.abs(z) ** 2, axis=(1, 2))


def np_detect_batch(
    z: np.ndarray,
    noise_power: Union[float, np.ndarray],
    n_win: np.ndarray,
    p_f: float
) -> np.ndarray:
    """Boolean decisions for a batch of padded blocks with per-window lengths."""
    k = z.shape[1]
    statistics = np_statistic_batch(z, noise_power)
    thresholds = np.array([np_threshold(int(k), int(n), float(p_f)) for n in np.asarray(n_win)])
    return statistics >= thresholds


__all__ = [
    "DetectionDecision",
    "np_threshold",
    "np_statistic",
    "np_detect",
    "np_statistic_batch",
    "np_detect_batch",
]
