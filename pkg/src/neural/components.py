"""
The four network components of the JCAS system and their input maps.

Sizes (input -> hidden -> output) for K antennas and M-QAM:

    beamformer  4       -> {K, K, 2K}         -> 2K   beam-normalized head
    decoder     3       -> {10M, 10M, 10M, 10M} -> log2 M  linear head (LLRs)
    angle       2K^2+2  -> {8K, 4K, 4K, K}    -> 1    scaled-tanh head
    detection   2K^2+2  -> {2K, 2K, K}        -> 1    sigmoid-with-offset head

Beamformer input is the region bounds (phi_min, phi_max, theta_min,
theta_max) in radians. With fixed regions the network reduces to a learned
constant, so a direct parameterization (a bare 2K-vector normalized by the
same head) is available as well.

Sensing receivers see the auto-correlation matrix: raw features are
Re(Corr) then Im(Corr) flattened row-major, then N_win, then sigma_ns.
``FeatureScaling`` turns them into network inputs
[Re Corr / sigma_ns^2, Im Corr / sigma_ns^2, N_win / 15, log10(sigma_ns^2)].

Decoder input per symbol is (Re z_eq, Im z_eq, sqrt(sigma_n^2 / (|kappa|^2 + sigma_n^2))),
the equalized sample and its post-equalization noise standard deviation.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from ..core.errors import ConfigurationError, ContractError, DomainError
from ..core.rng import RngLike, as_generator
from ..physics.waveform import AngleRegion
from .mlp import (
    ForwardCache,
    Head,
    MlpParams,
    MlpSpec,
    backward_cached,
    beam_normalize,
    beam_normalize_backward,
    forward_cached,
    init_params,
)
from .optim import DEFAULT_LR, AdamState

N_WIN_SCALE = 15.0


class ComponentKind(Enum):
    BEAMFORMER = "beamformer"
    DECODER = "decoder"
    ANGLE = "angle"
    DETECTION = "detection"


def build_component(kind: ComponentKind, antennas: int, order: int) -> MlpSpec:
    """Architecture of one component for K antennas and M-QAM."""
    if antennas < 1:
        raise ConfigurationError(f"Need at least one antenna, got {antennas}")
    if order < 2 or order & (order - 1):
        raise ConfigurationError(f"Constellation order must be a power of two, got {order}")
    k, m = antennas, order
    features = 2 * k * k + 2
    if kind is ComponentKind.BEAMFORMER:
        return MlpSpec((4, k, k, 2 * k, 2 * k), Head.BEAM_NORMALIZED)
    if kind is ComponentKind.DECODER:
        return MlpSpec((3, 10 * m, 10 * m, 10 * m, 10 * m, int(np.log2(m))), Head.LINEAR)
    if kind is ComponentKind.ANGLE:
        return MlpSpec((features, 8 * k, 4 * k, 4 * k, k, 1), Head.SCALED_TANH)
    if kind is ComponentKind.DETECTION:
        return MlpSpec((features, 2 * k, 2 * k, k, 1), Head.SIGMOID_OFFSET)
    raise ConfigurationError(f"Unknown component kind: {kind}")


def sensing_features(corr: np.ndarray, n_win, noise_std) -> np.ndarray:
    """
    Raw sensing features of length 2K^2 + 2.

    Accepts one K x K matrix or a stack (B, K, K) with per-window n_win and
    sigma_ns.
    """
    corr = np.asarray(corr, dtype=np.complex128)
    if corr.shape[-1] != corr.shape[-2]:
        raise ContractError(f"Correlation matrix must be square, got {corr.shape}")
    if corr.ndim == 2:
        return np.concatenate([corr.real.ravel(), corr.imag.ravel(), [float(n_win), float(noise_std)]])
    b = corr.shape[0]
    flat = corr.reshape(b, -1)
    scalars = np.stack(
        [np.broadcast_to(np.asarray(n_win, dtype=np.float64), (b,)),
         np.broadcast_to(np.asarray(noise_std, dtype=np.float64), (b,))],
        axis=1,
    )
    return np.concatenate([flat.real, flat.imag, scalars], axis=1)


@dataclass(frozen=True)
class FeatureScaling:
    """Fixed map from raw sensing features to network inputs."""
    n_win_scale: float = N_WIN_SCALE

    def apply(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        noise_std = features[..., -1]
        if np.any(noise_std <= 0):
            raise DomainError("Sensing features need sigma_ns > 0")
        noise_power = noise_std ** 2
        corr = features[..., :-2] / noise_power[..., np.newaxis]
        n_win = features[..., -2:-1] / self.n_win_scale
        level = np.log10(noise_power)[..., np.newaxis]
        return np.concatenate([corr, n_win, level], axis=-1)

    def backward_corr(self, grad_input: np.ndarray, noise_std: np.ndarray) -> np.ndarray:
        """Gradient with respect to the flattened [Re Corr, Im Corr] features."""
        noise_power = np.asarray(noise_std, dtype=np.float64) ** 2
        return grad_input[..., :-2] / noise_power[..., np.newaxis]


def decoder_inputs(
    z_eq: np.ndarray,
    kappa: np.ndarray,
    noise_power
) -> np.ndarray:
    """(N, 3) decoder inputs from equalized samples and channel gains."""
    z_eq = np.asarray(z_eq, dtype=np.complex128)
    spread = np.abs(np.asarray(kappa)) ** 2 + noise_power
    with np.errstate(divide="ignore", invalid="ignore"):
        noise_std = np.where(spread > 0, np.sqrt(noise_power / np.where(spread > 0, spread, 1.0)), 0.0)
    noise_std = np.broadcast_to(noise_std, z_eq.shape)
    return np.stack([z_eq.real, z_eq.imag, noise_std], axis=-1)


def beamformer_inputs(comm: AngleRegion, sensing: AngleRegion) -> np.ndarray:
    """Region bounds (phi_min, phi_max, theta_min, theta_max)."""
    return np.array([comm.min, comm.max, sensing.min, sensing.max])


@dataclass
class Component:
    """
    One trainable component: architecture, parameters and optimizer state.

    A BEAMFORMER with ``spec=None`` is the direct parameterization; its
    parameters are a single 2K bias block.
    """
    name: str
    kind: ComponentKind
    spec: Optional[MlpSpec]
    params: MlpParams
    adam: AdamState

    @property
    def direct(self) -> bool:
        return self.spec is None

    def forward_cached(self, x: np.ndarray, offset=0.0) -> Tuple[np.ndarray, ForwardCache]:
        if self.direct:
            raw = self.params.biases[0]
            cache = ForwardCache(raw=raw[np.newaxis, :], batched=False)
            cache.output = beam_normalize(cache.raw)
            return cache.output[0], cache
        return forward_cached(self.spec, self.params, x, offset)

    def backward_cached(
        self,
        cache: ForwardCache,
        upstream: np.ndarray,
        wrt_raw: bool = False
    ) -> Tuple[MlpParams, np.ndarray]:
        if self.direct:
            grad_raw = beam_normalize_backward(cache.raw[0], np.asarray(upstream))
            return MlpParams(weights=[], biases=[grad_raw]), np.zeros(0)
        return backward_cached(self.spec, self.params, cache, upstream, wrt_raw=wrt_raw)

    def widths(self) -> Tuple[int, ...]:
        if self.direct:
            return (int(self.params.biases[0].shape[0]),)
        return self.spec.widths

    def head(self) -> str:
        return Head.BEAM_NORMALIZED.value if self.direct else self.spec.head.value


def make_component(
    kind: ComponentKind,
    antennas: int,
    order: int,
    rng: RngLike,
    lr: float = DEFAULT_LR,
    direct: bool = False,
    name: Optional[str] = None
) -> Component:
    """Freshly initialized component with zeroed Adam moments."""
    if direct:
        if kind is not ComponentKind.BEAMFORMER:
            raise ConfigurationError("Only the beamformer has a direct parameterization")
        generator = as_generator(rng)
        raw = generator.standard_normal(2 * antennas)
        params = MlpParams(weights=[], biases=[raw])
        spec = None
    else:
        spec = build_component(kind, antennas, order)
        params = init_params(spec, rng)
    return Component(
        name=name or kind.value,
        kind=kind,
        spec=spec,
        params=params,
        adam=AdamState.for_params(params, lr=lr),
    )


__all__ = [
    "ComponentKind",
    "Component",
    "FeatureScaling",
    "build_component",
    "make_component",
    "sensing_features",
    "decoder_inputs",
    "beamformer_inputs",
    "N_WIN_SCALE",
]
