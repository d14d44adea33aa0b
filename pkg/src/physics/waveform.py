"""
Transmitter-side signal construction.

Constellation and bit mapping, half-wavelength uniform linear array geometry,
beamforming weights and the transmit block Y = v x^T.

Conventions:
    - Antenna k = 1..K carries phase pi * k * sin(angle); the first entry is
      not phase-free. A global phase does not change any gain or estimate.
    - Bit labels: label of constellation point m is the n-bit binary
      expansion of m (MSB first). The first n/2 bits select the in-phase
      level through a reflected Gray code, the last n/2 bits the quadrature
      level, so ``points[m]`` is the point labelled ``m``.
    - Beam weights are complex vectors with sum |v_k|^2 = 1.
"""

from dataclasses import dataclass, field
from typing import Dict, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..core.errors import ConfigurationError, DomainError, PreconditionError
from ..core.rng import RngLike, as_generator

SUPPORTED_QAM_ORDERS = (4, 16, 64)
DEFAULT_PATTERN_GRID = 721
POWER_RTOL = 1e-12
_HALF_PI = np.pi / 2.0


@dataclass(frozen=True)
class AngleRegion:
    """
    Azimuth interval [min, max] in radians, inside [-pi/2, pi/2].

    Attributes:
        min: lower bound (rad)
        max: upper bound (rad)
    """
    min: float
    max: float

    def __post_init__(self):
        if not (-_HALF_PI - 1e-12 <= self.min <= self.max <= _HALF_PI + 1e-12):
            raise ConfigurationError(
                f"Invalid angle region [{self.min}, {self.max}]: "
                "need -pi/2 <= min <= max <= pi/2"
            )

    @staticmethod
    def from_degrees(lo: float, hi: float) -> "AngleRegion":
        return AngleRegion(float(np.deg2rad(lo)), float(np.deg2rad(hi)))

    @staticmethod
    def full() -> "AngleRegion":
        return AngleRegion(-_HALF_PI, _HALF_PI)

    @property
    def center(self) -> float:
        return 0.5 * (self.min + self.max)

    @property
    def width(self) -> float:
        return self.max - self.min

    def as_degrees(self) -> Tuple[float, float]:
        return float(np.rad2deg(self.min)), float(np.rad2deg(self.max))


@dataclass(frozen=True)
class Constellation:
    """
    Unit-energy constellation with fixed bit labels.

    Attributes:
        order: number of points M (power of two)
        points: (M,) complex symbols, ``points[m]`` carries label m
        labels: (M, n) uint8 bit labels, n = log2(M)
    """
    order: int
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.points.shape != (self.order,):
            raise ConfigurationError("Constellation must have exactly M points")
        if len({tuple(row) for row in self.labels.tolist()}) != self.order:
            raise ConfigurationError("Constellation labels must be distinct")

    @property
    def bits_per_symbol(self) -> int:
        return int(self.labels.shape[1])

    def index_of(self, bits: np.ndarray) -> np.ndarray:
        """Symbol index for (..., n) bit arrays (MSB first)."""
        bits = np.asarray(bits)
        n = self.bits_per_symbol
        if bits.shape[-1] != n:
            raise DomainError(f"Expected {n} bits per symbol, got {bits.shape[-1]}")
        weights = 1 << np.arange(n - 1, -1, -1)
        return (bits.astype(np.int64) * weights).sum(axis=-1)


def _gray(i: np.ndarray) -> np.ndarray:
    return i ^ (i >> 1)


def build_qam(order: int) -> Constellation:
    """
    Square Gray-mapped QAM with unit average energy.

    Args:
        order: 4, 16 or 64

    Raises:
        ConfigurationError: unsupported order
    """
    if order not in SUPPORTED_QAM_ORDERS:
        raise ConfigurationError(
            f"Unsupported QAM order {order}; choose one of {SUPPORTED_QAM_ORDERS}"
        )
    n = int(np.log2(order))
    half = n // 2
    side = 1 << half
    levels = np.arange(-(side - 1), side, 2, dtype=np.float64)

    # Level index whose Gray code equals a given half-label.
    gray_to_level = np.empty(side, dtype=np.int64)
    gray_to_level[_gray(np.arange(side))] = np.arange(side)

    symbols = np.arange(order)
    in_phase = levels[gray_to_level[symbols >> half]]
    quadrature = levels[gray_to_level[symbols & (side - 1)]]
    scale = np.sqrt(2.0 * (order - 1) / 3.0)
    points = (in_phase + 1j * quadrature) / scale

    labels = ((symbols[:, np.newaxis] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    return Constellation(order=order, points=points, labels=labels)


def modulate(bits: np.ndarray, constellation: Constellation) -> Union[complex, np.ndarray]:
    """
    Map bit labels to constellation points.

    ``bits`` of shape (n,) yields one complex symbol; (..., n) yields an array.

    Raises:
        DomainError: trailing dimension differs from log2(M)
    """
    bits = np.asarray(bits)
    indices = constellation.index_of(bits)
    symbols = constellation.points[indices]
    if bits.ndim == 1:
        return complex(symbols)
    return symbols


def random_bits(n_symbols: int, constellation: Constellation, rng: RngLike) -> np.ndarray:
    """Uniform i.i.d. bits of shape (n_symbols, n)."""
    generator = as_generator(rng)
    return generator.integers(0, 2, size=(n_symbols, constellation.bits_per_symbol), dtype=np.uint8)


def steering_vector(angle: Union[float, np.ndarray], antennas: int) -> np.ndarray:
    """
    ULA response exp(j pi k sin(angle)), k = 1..K, for lambda/2 spacing.

    A scalar angle gives shape (K,); an array of angles gives (..., K).

    Raises:
        DomainError: |angle| > pi/2
    """
    angle = np.asarray(angle, dtype=np.float64)
    if np.any(np.abs(angle) > _HALF_PI + 1e-12):
        raise DomainError("Steering angles must satisfy |angle| <= pi/2")
    k = np.arange(1, antennas + 1)
    return np.exp(1j * np.pi * np.sin(angle)[..., np.newaxis] * k)


@dataclass(frozen=True)
class BeamWeights:
    """
    Power-normalized beamforming vector v (sum |v_k|^2 = 1).

    Attributes:
        weights: (K,) complex per-antenna gain g_k exp(j gamma_k)
    """
    weights: np.ndarray

    def __post_init__(self):
        power = float(np.sum(np.abs(self.weights) ** 2))
        if abs(power - 1.0) > POWER_RTOL * 10:
            raise PreconditionError(f"Beam weights are not power normalized (sum |v|^2 = {power})")

    @staticmethod
    def normalized(raw: np.ndarray) -> "BeamWeights":
        raw = np.asarray(raw, dtype=np.complex128)
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            raise PreconditionError("Cannot normalize an all-zero weight vector")
        return BeamWeights(raw / norm)

    @property
    def antennas(self) -> int:
        return int(self.weights.shape[0])


def _weights(v: Union[BeamWeights, np.ndarray]) -> np.ndarray:
    return v.weights if isinstance(v, BeamWeights) else np.asarray(v, dtype=np.complex128)


def matched_beam(angle: float, antennas: int) -> BeamWeights:
    """Conjugate steering beam toward ``angle``; gain K at that angle."""
    return BeamWeights(np.conj(steering_vector(angle, antennas)) / np.sqrt(antennas))


def uniform_beam(antennas: int) -> BeamWeights:
    return BeamWeights(np.full(antennas, 1.0 / np.sqrt(antennas), dtype=np.complex128))


def assemble_block(v: Union[BeamWeights, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Transmit block Y = v x^T of shape (K, N_win)."""
    return np.outer(_weights(v), np.asarray(x, dtype=np.complex128))


def beam_gain(v: Union[BeamWeights, np.ndarray], angle: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Beamforming gain |a(angle)^T v|^2 (scalar or per angle)."""
    weights = _weights(v)
    response = steering_vector(angle, weights.shape[0]) @ weights
    gain = np.abs(response) ** 2
    if np.ndim(gain) == 0:
        return float(gain)
    return gain


def _pattern_nodes(grid: int, *regions: AngleRegion) -> np.ndarray:
    nodes = np.linspace(-_HALF_PI, _HALF_PI, grid)
    edges = [edge for region in regions for edge in (region.min, region.max)]
    return np.unique(np.concatenate([nodes, np.clip(edges, -_HALF_PI, _HALF_PI)]))


def _cumulative_gain(weights: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    return cumulative_trapezoid(beam_gain(weights, nodes), nodes, initial=0.0)


def _fraction(cumulative: np.ndarray, nodes: np.ndarray, region: AngleRegion) -> float:
    if region.width <= 0.0:
        return 0.0
    total = cumulative[-1]
    lo = np.searchsorted(nodes, region.min)
    hi = np.searchsorted(nodes, region.max)
    return float(np.clip((cumulative[hi] - cumulative[lo]) / total, 0.0, 1.0))


def region_power(
    v: Union[BeamWeights, np.ndarray],
    region: AngleRegion,
    grid: int = DEFAULT_PATTERN_GRID
) -> float:
    """
    Fraction of radiated power (integral of beam_gain) falling into ``region``.

    Trapezoidal quadrature on ``grid`` uniform nodes over [-pi/2, pi/2] with
    the region edges inserted as extra nodes, normalized by the total.
    """
    if grid < 2:
        raise DomainError("Quadrature grid needs at least 2 nodes")
    nodes = _pattern_nodes(grid, region)
    return _fraction(_cumulative_gain(_weights(v), nodes), nodes, region)


def beam_power_fractions(
    v: Union[BeamWeights, np.ndarray],
    sensing: AngleRegion,
    comm: AngleRegion,
    grid: int = DEFAULT_PATTERN_GRID
) -> Dict[str, float]:
    """
    Sensing, communication and outside power fractions on one shared grid.

    The regions are assumed disjoint; the three fractions then sum to one up
    to rounding.
    """
    nodes = _pattern_nodes(grid, sensing, comm)
    cumulative = _cumulative_gain(_weights(v), nodes)
    fractions = {
        "sensing": _fraction(cumulative, nodes, sensing),
        "comm": _fraction(cumulative, nodes, comm),
    }
    fractions["outside"] = float(max(0.0, 1.0 - fractions["sensing"] - fractions["comm"]))
    return fractions


def mean_beam_gain(v: Union[BeamWeights, np.ndarray], region: AngleRegion, grid: int = 201) -> float:
    """Average gain over a region (beta-bar), the SNR correction factor."""
    if region.width <= 0.0:
        return beam_gain(v, region.center)
    angles = np.linspace(region.min, region.max, grid)
    return float(np.mean(beam_gain(v, angles)))


__all__ = [
    "AngleRegion",
    "Constellation",
    "BeamWeights",
    "build_qam",
    "modulate",
    "random_bits",
    "steering_vector",
    "matched_beam",
    "uniform_beam",
    "assemble_block",
    "beam_gain",
    "region_power",
    "beam_power_fractions",
    "mean_beam_gain",
    "SUPPORTED_QAM_ORDERS",
    "DEFAULT_PATTERN_GRID",
]
