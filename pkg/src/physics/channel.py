"""
Stochastic propagation for the monostatic JCAS link.

Communication link (single-tap Rayleigh):
    z_c,n = (a(phi_n)^T v) alpha_c,n x_n + n_c,n
    alpha_c,n ~ CN(0, sigma_c^2), n_c,n ~ CN(0, sigma_n^2),
    phi_n uniform on the receiver region (per symbol, or once per window).

Sensing link (Swerling-1 reflection, a_RX = a_TX):
    Z_s = T a(theta) a(theta)^T Y diag(alpha_s) + N_s
    alpha_s,n ~ CN(0, sigma_s^2) redrawn per snapshot, N_s entries CN(0, sigma_ns^2).

Pre-processing:
    Corr(Z_s) = Z_s Z_s^H / N_win

Single-window functions take one transmit block Y (K x N_win). The batch
functions work on windows of varying length stored zero-padded to N_max;
padded columns carry neither signal nor noise, so sums over a padded window
equal sums over its valid snapshots.

Random draws are taken in a fixed order (angles, gains, noise) so that a
given stream reproduces the same realization bit for bit.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from ..core.errors import ConfigurationError, DomainError, PreconditionError
from ..core.numerics import sample_complex_normal
from ..core.rng import RngLike, as_generator
from .waveform import AngleRegion, BeamWeights, steering_vector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommLinkParams:
    """
    Communication link parameters.

    Attributes:
        fading_power: sigma_c^2
        noise_power: sigma_n^2
        region: receiver angle region [phi_min, phi_max]
        per_symbol_angle: redraw phi for every symbol (True) or once per window
    """
    fading_power: float
    noise_power: float
    region: AngleRegion
    per_symbol_angle: bool = True

    def __post_init__(self):
        if self.fading_power < 0 or self.noise_power < 0:
            raise ConfigurationError(
                f"Link powers must be non-negative (sigma_c^2={self.fading_power}, "
                f"sigma_n^2={self.noise_power})"
            )

    @property
    def snr(self) -> float:
        """Raw SNR_c = sigma_c^2 / sigma_n^2."""
        if self.noise_power == 0:
            return float("inf")
        return self.fading_power / self.noise_power


@dataclass(frozen=True)
class SenseLinkParams:
    """
    Sensing link parameters.

    Attributes:
        reflection_power: sigma_s^2
        noise_power: sigma_ns^2
        region: target angle region [theta_min, theta_max]
        target_prior: P(T = 1)
    """
    reflection_power: float
    noise_power: float
    region: AngleRegion
    target_prior: float = 0.5

    def __post_init__(self):
        if self.reflection_power < 0 or self.noise_power < 0:
            raise ConfigurationError(
                f"Link powers must be non-negative (sigma_s^2={self.reflection_power}, "
                f"sigma_ns^2={self.noise_power})"
            )
        if not 0.0 <= self.target_prior <= 1.0:
            raise ConfigurationError(f"Target prior must lie in [0, 1], got {self.target_prior}")

    @property
    def snr(self) -> float:
        """Raw SNR_s = sigma_s^2 / sigma_ns^2."""
        if self.noise_power == 0:
            return float("inf")
        return self.reflection_power / self.noise_power


@dataclass(frozen=True)
class SensingScene:
    """
    One sensing window.

    Attributes:
        present: target presence T
        angle: target angle theta (rad); drawn even when T = 0
        gains: (N_win,) Swerling-1 reflection gains alpha_s
    """
    present: bool
    angle: float
    gains: np.ndarray = field(repr=False)

    def __post_init__(self):
        if abs(self.angle) > np.pi / 2 + 1e-12:
            raise DomainError(f"Scene angle {self.angle} outside [-pi/2, pi/2]")

    @property
    def n_win(self) -> int:
        return int(self.gains.shape[0])


@dataclass(frozen=True)
class CommRealization:
    """
    Per-symbol channel state of the communication link.

    Attributes:
        angles: (N,) receiver angles phi_n
        fading: (N,) Rayleigh taps alpha_c,n
        kappa: (N,) effective gains (a(phi_n)^T v) alpha_c,n
    """
    angles: np.ndarray
    fading: np.ndarray
    kappa: np.ndarray


def _draw_angles(
    generator: np.random.Generator,
    region: AngleRegion,
    n: int,
    window_index: Optional[np.ndarray]
) -> np.ndarray:
    if window_index is None:
        return generator.uniform(region.min, region.max, size=n)
    n_windows = int(window_index.max()) + 1 if n else 0
    return generator.uniform(region.min, region.max, size=n_windows)[window_index]


def draw_comm(
    x: np.ndarray,
    v: Union[BeamWeights, np.ndarray],
    params: CommLinkParams,
    rng: RngLike,
    window_index: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, CommRealization]:
    """
    Pass a symbol stream through the communication link.

    Args:
        x: (N,) transmitted symbols
        v: beam weights
        params: link parameters
        rng: random stream
        window_index: (N,) window id per symbol; used when angles are drawn
            once per window

    Returns:
        (z_c, realization)
    """
    generator = as_generator(rng)
    weights = v.weights if isinstance(v, BeamWeights) else np.asarray(v)
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[0]
    index = None if params.per_symbol_angle else (
        window_index if window_index is not None else np.zeros(n, dtype=np.int64)
    )
    angles = _draw_angles(generator, params.region, n, index)
    fading = sample_complex_normal(generator, params.fading_power, n)
    noise = sample_complex_normal(generator, params.noise_power, n)

    kappa = (steering_vector(angles, weights.shape[0]) @ weights) * fading
    z = kappa * x + noise
    return z, CommRealization(angles=angles, fading=fading, kappa=kappa)


def comm_channel(
    y: np.ndarray,
    params: CommLinkParams,
    v: Union[BeamWeights, np.ndarray],
    rng: RngLike
) -> Tuple[np.ndarray, CommRealization]:
    """
    Single-tap Rayleigh channel applied to a transmit block Y = v x^T.

    The received sample sums the antenna contributions of column n along the
    steering vector of phi_n, so z_c,n = kappa_n x_n + n_c,n when Y has the
    rank-one form. With ``per_symbol_angle=False`` one angle serves the whole
    block.
    """
    generator = as_generator(rng)
    weights = v.weights if isinstance(v, BeamWeights) else np.asarray(v)
    y = np.asarray(y, dtype=np.complex128)
    if y.ndim != 2 or y.shape[0] != weights.shape[0]:
        raise PreconditionError(f"Block shape {y.shape} does not match K={weights.shape[0]}")
    n = y.shape[1]
    index = None if params.per_symbol_angle else np.zeros(n, dtype=np.int64)
    angles = _draw_angles(generator, params.region, n, index)
    fading = sample_complex_normal(generator, params.fading_power, n)
    noise = sample_complex_normal(generator, params.noise_power, n)

    steering = steering_vector(angles, weights.shape[0])
    through_array = np.einsum("nk,kn->n", steering, y)
    z = fading * through_array + noise
    kappa = (steering @ weights) * fading
    return z, CommRealization(angles=angles, fading=fading, kappa=kappa)


def sample_scene(params: SenseLinkParams, n_win: int, rng: RngLike) -> SensingScene:
    """Draw T ~ Bernoulli(p_T1), theta uniform on the target region, alpha_s per snapshot."""
    if n_win < 1:
        raise DomainError(f"Sensing window must hold at least one snapshot, got {n_win}")
    generator = as_generator(rng)
    present = bool(generator.random() < params.target_prior)
    angle = float(generator.uniform(params.region.min, params.region.max))
    gains = sample_complex_normal(generator, params.reflection_power, n_win)
    return SensingScene(present=present, angle=angle, gains=gains)


def sense_channel(
    y: np.ndarray,
    scene: SensingScene,
    params: SenseLinkParams,
    rng: RngLike
) -> np.ndarray:
    """
    Monostatic reflection of the transmit block plus receiver noise.

    Column n equals T alpha_s,n (a(theta)^T y_n) a(theta) + noise.
    """
    y = np.asarray(y, dtype=np.complex128)
    k, n = y.shape
    if scene.n_win != n:
        raise PreconditionError(f"Scene holds {scene.n_win} gains for a block of {n} snapshots")
    generator = as_generator(rng)
    noise = sample_complex_normal(generator, params.noise_power, (k, n))
    if not scene.present:
        return noise
    a = steering_vector(scene.angle, k)
    echo = (a @ y) * scene.gains
    return np.outer(a, echo) + noise


def acm(z: np.ndarray) -> np.ndarray:
    """Auto-correlation matrix Z Z^H / N_win."""
    z = np.asarray(z, dtype=np.complex128)
    if z.ndim != 2 or z.shape[1] < 1:
        raise PreconditionError(f"Expected a K x N_win block with N_win >= 1, got {z.shape}")
    return (z @ z.conj().T) / z.shape[1]


# Batched windows


@dataclass
class SceneBatch:
    """
    A batch of sensing windows, zero-padded to N_max snapshots.

    Attributes:
        present: (B,) bool target presence
        angles: (B,) target angles (rad)
        gains: (B, N_max) reflection gains, zero beyond each window
        n_win: (B,) valid snapshots per window
        noise_power: (B,) sigma_ns^2 per window
    """
    present: np.ndarray
    angles: np.ndarray
    gains: np.ndarray
    n_win: np.ndarray
    noise_power: np.ndarray

    @property
    def size(self) -> int:
        return int(self.present.shape[0])

    @property
    def n_max(self) -> int:
        return int(self.gains.shape[1])

    @property
    def mask(self) -> np.ndarray:
        """(B, N_max) True on valid snapshots."""
        return np.arange(self.n_max)[np.newaxis, :] < self.n_win[:, np.newaxis]

    def scene(self, i: int) -> SensingScene:
        return SensingScene(
            present=bool(self.present[i]),
            angle=float(self.angles[i]),
            gains=self.gains[i, : self.n_win[i]].copy(),
        )


def sample_scene_batch(
    params: SenseLinkParams,
    n_win: np.ndarray,
    rng: RngLike,
    noise_power: Optional[np.ndarray] = None,
    present: Optional[np.ndarray] = None
) -> SceneBatch:
    """
    Draw a batch of scenes for the given window lengths.

    ``noise_power`` overrides sigma_ns^2 per window (training draws it
    log-uniformly); ``present`` forces target presence (calibration uses an
    all-False vector).
    """
    n_win = np.asarray(n_win, dtype=np.int64)
    if n_win.ndim != 1 or n_win.size == 0 or n_win.min() < 1:
        raise DomainError("Window lengths must be a non-empty vector of positive counts")
    generator = as_generator(rng)
    b = n_win.shape[0]
    n_max = int(n_win.max())

    drawn_present = generator.random(b) < params.target_prior
    angles = generator.uniform(params.region.min, params.region.max, size=b)
    gains = sample_complex_normal(generator, params.reflection_power, (b, n_max))
    mask = np.arange(n_max)[np.newaxis, :] < n_win[:, np.newaxis]
    gains = np.where(mask, gains, 0.0)

    if present is None:
        present = drawn_present
    if noise_power is None:
        noise_power = np.full(b, params.noise_power)
    return SceneBatch(
        present=np.asarray(present, dtype=bool),
        angles=angles,
        gains=gains,
        n_win=n_win,
        noise_power=np.asarray(noise_power, dtype=np.float64),
    )


def reflection_template(
    x_windows: np.ndarray,
    scenes: SceneBatch,
    antennas: int
) -> np.ndarray:
    """
    Noise-free echo per unit beam response, S[b, k, n] = alpha_s,bn x_bn a_k(theta_b).

    The received signal is T_b g_b S[b] with g_b = a(theta_b)^T v.
    """
    a = steering_vector(scenes.angles, antennas)
    return a[:, :, np.newaxis] * (scenes.gains * x_windows)[:, np.newaxis, :]


def sense_channel_batch(
    x_windows: np.ndarray,
    v: Union[BeamWeights, np.ndarray],
    scenes: SceneBatch,
    rng: RngLike
) -> np.ndarray:
    """
    Batched sensing channel.

    Args:
        x_windows: (B, N_max) symbols per window, zero-padded
        v: beam weights
        scenes: scene batch
        rng: random stream

    Returns:
        (B, K, N_max) received blocks, zero on padded snapshots
    """
    weights = v.weights if isinstance(v, BeamWeights) else np.asarray(v)
    k = weights.shape[0]
    generator = as_generator(rng)
    b, n_max = scenes.size, scenes.n_max
    noise = sample_complex_normal(generator, 1.0, (b, k, n_max))
    noise *= np.sqrt(scenes.noise_power)[:, np.newaxis, np.newaxis]

    g = steering_vector(scenes.angles, k) @ weights
    template = reflection_template(x_windows, scenes, k)
    z = scenes.present[:, np.newaxis, np.newaxis] * g[:, np.newaxis, np.newaxis] * template + noise
    return z * scenes.mask[:, np.newaxis, :]


def acm_batch(z: np.ndarray, n_win: np.ndarray) -> np.ndarray:
    """Stacked ACMs (B, K, K) of zero-padded blocks (B, K, N_max)."""
    n_win = np.asarray(n_win, dtype=np.float64)
    return np.einsum("bkn,bln->bkl", z, z.conj()) / n_win[:, np.newaxis, np.newaxis]


def partition_windows(
    n_symbols: int,
    n_win_range: Tuple[int, int],
    rng: RngLike
) -> np.ndarray:
    """
    Split a stream of ``n_symbols`` into consecutive windows.

    Window lengths are i.i.d. uniform on [lo, hi]; the final window is cut
    to the symbols that remain, so it can be shorter than ``lo`` (never
    longer than ``hi``). Every symbol of the stream lands in exactly one
    window.
    """
    lo, hi = n_win_range
    if not 1 <= lo <= hi:
        raise ConfigurationError(f"Invalid window range {n_win_range}")
    generator = as_generator(rng)
    # Enough draws to cover the stream with the shortest windows.
    lengths = generator.integers(lo, hi + 1, size=n_symbols // lo + 1)
    ends = np.cumsum(lengths)
    count = int(np.searchsorted(ends, n_symbols)) + 1
    lengths = lengths[:count].copy()
    lengths[-1] -= int(ends[count - 1]) - n_symbols
    return lengths


def window_symbols(x: np.ndarray, n_win: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lay a symbol stream out as zero-padded windows.

    Returns:
        (x_windows (B, N_max), window_index (N,)) where window_index[i] is the
        window holding symbol i
    """
    n_win = np.asarray(n_win, dtype=np.int64)
    if int(n_win.sum()) != x.shape[0]:
        raise PreconditionError(f"Windows cover {int(n_win.sum())} symbols, stream has {x.shape[0]}")
    n_max = int(n_win.max())
    window_index = np.repeat(np.arange(n_win.shape[0]), n_win)
    starts = np.concatenate([[0], np.cumsum(n_win)[:-1]])
    offset = np.arange(x.shape[0]) - starts[window_index]
    x_windows = np.zeros((n_win.shape[0], n_max), dtype=np.complex128)
    x_windows[window_index, offset] = x
    return x_windows, window_index


__all__ = [
    "CommLinkParams",
    "SenseLinkParams",
    "SensingScene",
    "CommRealization",
    "SceneBatch",
    "draw_comm",
    "comm_channel",
    "sample_scene",
    "sense_channel",
    "acm",
    "sample_scene_batch",
    "reflection_template",
    "sense_channel_batch",
    "acm_batch",
    "partition_windows",
    "window_symbols",
]
