"""
Cramer-Rao bound for single-target AoA estimation.

    C = 1 / (pi^2 cos^2 theta) * sigma_ns^2 / (2 N_win)
          * (sigma_ns^2 + K beta sigma_s^2) / (K beta^2 sigma_s^3)
          * 6 / (0.5 K^3 - 0.5 K)

The sigma_s^3 denominator is evaluated as written. ``conventional=True``
replaces it with sigma_s^4 (the dimensionally consistent power), which is
useful for sensitivity checks only.
"""

from dataclasses import dataclass

import numpy as np

from ..core.errors import DomainError, SingularityError


@dataclass(frozen=True)
class CrbInputs:
    """
    Attributes:
        angle: theta (rad), |theta| < pi/2
        noise_power: sigma_ns^2 > 0
        reflection_power: sigma_s^2 > 0
        beam_gain: beta > 0 toward theta
        antennas: K >= 2
        n_win: N_win >= 1
    """
    angle: float
    noise_power: float
    reflection_power: float
    beam_gain: float
    antennas: int
    n_win: int

    def __post_init__(self):
        if self.noise_power <= 0 or self.reflection_power <= 0 or self.beam_gain <= 0:
            raise DomainError(
                "CRB needs positive powers and gain "
                f"(sigma_ns^2={self.noise_power}, sigma_s^2={self.reflection_power}, "
                f"beta={self.beam_gain})"
            )
        if self.antennas < 2 or self.n_win < 1:
            raise DomainError(f"CRB needs K >= 2 and N_win >= 1 (K={self.antennas}, N_win={self.n_win})")
        if abs(self.angle) > np.pi / 2:
            raise DomainError(f"Angle {self.angle} outside [-pi/2, pi/2]")


def crb(inputs: CrbInputs, conventional: bool = False) -> float:
    """
    Variance bound (rad^2) for an unbiased AoA estimator.

    Raises:
        SingularityError: cos(theta) = 0
    """
    cos_sq = np.cos(inputs.angle) ** 2
    if abs(inputs.angle) >= np.pi / 2 or cos_sq == 0.0:
        raise SingularityError(f"CRB is singular at theta = {inputs.angle} (cos theta = 0)")

    k = float(inputs.antennas)
    beta = inputs.beam_gain
    s2 = inputs.reflection_power
    n2 = inputs.noise_power
    reflection_term = s2 ** 2 if conventional else s2 ** 1.5

    geometry = 1.0 / (np.pi ** 2 * cos_sq)
    window = n2 / (2.0 * inputs.n_win)
    snr_term = (n2 + k * beta * s2) / (k * beta ** 2 * reflection_term)
    aperture = 6.0 / (0.5 * k ** 3 - 0.5 * k)
    return float(geometry * window * snr_term * aperture)


__all__ = ["CrbInputs", "crb"]
