"""
Dense feed-forward networks with ELU hidden layers and reverse-mode gradients.

Layout:
    h_0 = input
    a_l = h_l W_l + b_l           (W_l has shape fan_in x fan_out)
    h_{l+1} = elu(a_l)            for every hidden layer
    raw = h_L W_L + b_L           (last layer is affine)
    output = head(raw)

Heads:
    LINEAR           output = raw (decoder LLRs)
    SIGMOID_OFFSET   output = sigmoid(raw + T_off) (detection probability)
    SCALED_TANH      output = (pi/2) tanh(raw) (angle in [-pi/2, pi/2])
    BEAM_NORMALIZED  2K raw values read as K complex weights (real parts first)
                     and scaled to unit power

Inputs are a single vector (d,) or a batch (B, d). Parameter gradients of
a batch are sums over the batch in index order.

Complex gradients (beam head) use g = dL/dRe + j dL/dIm for a real loss L.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import ConfigurationError, ContractError, PreconditionError
from ..core.rng import RngLike, as_generator

ELU_ALPHA = 1.0
HALF_PI = np.pi / 2.0


class Head(Enum):
    """Output head applied after the final affine layer."""
    LINEAR = "linear"
    SIGMOID_OFFSET = "sigmoid_offset"
    SCALED_TANH = "scaled_tanh"
    BEAM_NORMALIZED = "beam_normalized"


@dataclass(frozen=True)
class MlpSpec:
    """
    Network architecture.

    Attributes:
        widths: (input, hidden..., output) layer widths
        head: output head
    """
    widths: Tuple[int, ...]
    head: Head = Head.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 3:
            raise ConfigurationError(
                f"An MLP needs an input, at least one hidden and an output width, got {self.widths}"
            )
        if min(self.widths) < 1:
            raise ConfigurationError(f"Layer widths must be positive, got {self.widths}")
        if self.head is Head.BEAM_NORMALIZED and self.widths[-1] % 2:
            raise ConfigurationError("Beam head needs an even output width (2K reals)")

    @property
    def input_width(self) -> int:
        return self.widths[0]

    @property
    def output_width(self) -> int:
        return self.widths[-1]

    @property
    def hidden(self) -> Tuple[int, ...]:
        return self.widths[1:-1]

    def layer_shapes(self) -> List[Tuple[int, int]]:
        return list(zip(self.widths[:-1], self.widths[1:]))


@dataclass
class MlpParams:
    """
    Per-layer weights (fan_in x fan_out) and biases (fan_out,).

    ``blocks()`` lists the arrays in storage order W_0, b_0, W_1, b_1, ...
    A parameter set with no weights and a single bias block is a bare
    trainable vector (the direct beamformer).
    """
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def blocks(self) -> List[np.ndarray]:
        if not self.weights:
            return list(self.biases)
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out

    def block_names(self) -> List[str]:
        if not self.weights:
            return [f"b{i}" for i in range(len(self.biases))]
        names = []
        for i in range(len(self.weights)):
            names.extend([f"W{i}", f"b{i}"])
        return names

    @staticmethod
    def from_blocks(blocks: List[np.ndarray], direct: bool = False) -> "MlpParams":
        if direct:
            return MlpParams(weights=[], biases=list(blocks))
        return MlpParams(weights=list(blocks[0::2]), biases=list(blocks[1::2]))

    def copy(self) -> "MlpParams":
        return MlpParams(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            weights=[np.zeros_like(w) for w in self.weights],
            biases=[np.zeros_like(b) for b in self.biases],
        )

    def add_(self, other: "MlpParams") -> "MlpParams":
        for dst, src in zip(self.blocks(), other.blocks()):
            dst += src
        return self

    def scale(self, factor: float) -> "MlpParams":
        return MlpParams(
            weights=[w * factor for w in self.weights],
            biases=[b * factor for b in self.biases],
        )

    @property
    def size(self) -> int:
        return int(sum(block.size for block in self.blocks()))

    def check(self, spec: MlpSpec) -> None:
        shapes = spec.layer_shapes()
        if len(self.weights) != len(shapes) or len(self.biases) != len(shapes):
            raise ContractError(f"Expected {len(shapes)} layers, got {len(self.weights)}")
        for i, ((fan_in, fan_out), w, b) in enumerate(zip(shapes, self.weights, self.biases)):
            if w.shape != (fan_in, fan_out) or b.shape != (fan_out,):
                raise ContractError(
                    f"Layer {i}: expected W {(fan_in, fan_out)} and b {(fan_out,)}, "
                    f"got {w.shape} and {b.shape}"
                )


def init_params(spec: MlpSpec, rng: RngLike) -> MlpParams:
    """Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases."""
    generator = as_generator(rng)
    weights, biases = [], []
    for fan_in, fan_out in spec.layer_shapes():
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(generator.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights=weights, biases=biases)


def elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, ELU_ALPHA * np.expm1(np.minimum(x, 0.0)))


def elu_grad(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, 1.0, ELU_ALPHA * np.exp(np.minimum(x, 0.0)))


def beam_normalize(raw: np.ndarray) -> np.ndarray:
    """(..., 2K) reals -> (..., K) complex weights with unit power."""
    raw = np.asarray(raw, dtype=np.float64)
    k = raw.shape[-1] // 2
    u = raw[..., :k] + 1j * raw[..., k:]
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    if np.any(norm == 0.0):
        raise PreconditionError("Beamformer produced an all-zero weight vector")
    return u / norm


def beam_normalize_backward(raw: np.ndarray, grad_v: np.ndarray) -> np.ndarray:
    """
    Gradient through v = u / ||u||, u = raw[:K] + j raw[K:].

    g_u = (g_v - v Re(v^H g_v)) / ||u||, returned as [Re g_u, Im g_u].
    """
    raw = np.asarray(raw, dtype=np.float64)
    k = raw.shape[-1] // 2
    u = raw[..., :k] + 1j * raw[..., k:]
    norm = np.linalg.norm(u, axis=-1, keepdims=True)
    v = u / norm
    radial = np.real(np.sum(np.conj(v) * grad_v, axis=-1, keepdims=True))
    grad_u = (grad_v - v * radial) / norm
    return np.concatenate([grad_u.real, grad_u.imag], axis=-1)


@dataclass
class ForwardCache:
    """Intermediate values kept by ``forward_cached`` for the backward pass."""
    inputs: List[np.ndarray] = field(default_factory=list)
    preacts: List[np.ndarray] = field(default_factory=list)
    raw: Optional[np.ndarray] = None
    output: Optional[np.ndarray] = None
    offset: float = 0.0
    batched: bool = False


def _as_batch(spec: MlpSpec, x: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    batched = x.ndim == 2
    if x.ndim not in (1, 2) or x.shape[-1] != spec.input_width:
        raise ContractError(f"Expected input width {spec.input_width}, got shape {x.shape}")
    return (x if batched else x[np.newaxis, :]), batched


def _apply_head(head: Head, raw: np.ndarray, offset) -> np.ndarray:
    if head is Head.LINEAR:
        return raw
    if head is Head.SIGMOID_OFFSET:
        offset = np.asarray(offset, dtype=np.float64)
        if offset.ndim == 1:
            offset = offset[:, np.newaxis]
        return expit(raw + offset)
    if head is Head.SCALED_TANH:
        return HALF_PI * np.tanh(raw)
    return beam_normalize(raw)


def forward_cached(
    spec: MlpSpec,
    params: MlpParams,
    x: np.ndarray,
    offset=0.0
) -> Tuple[np.ndarray, ForwardCache]:
    """Forward pass returning the head output and the cache for ``backward_cached``."""
    params.check(spec)
    h, batched = _as_batch(spec, x)
    cache = ForwardCache(offset=offset, batched=batched)
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        cache.inputs.append(h)
        a = h @ w + b
        if i < last:
            cache.preacts.append(a)
            h = elu(a)
        else:
            cache.raw = a
    cache.output = _apply_head(spec.head, cache.raw, offset)
    out = cache.output if batched else cache.output[0]
    return out, cache


def forward(
    spec: MlpSpec,
    params: MlpParams,
    x: np.ndarray,
    offset=0.0,
    raw: bool = False
) -> np.ndarray:
    """
    Evaluate the network.

    Args:
        spec: architecture
        params: weights and biases
        x: (d,) or (B, d) input
        offset: detection threshold offset T_off (scalar or per row), used
            by the sigmoid head only
        raw: return the pre-head values instead of the head output

    Raises:
        ContractError: input or parameter shapes do not match ``spec``
    """
    _, cache = forward_cached(spec, params, x, offset)
    values = cache.raw if raw else cache.output
    return values if cache.batched else values[0]


def backward_cached(
    spec: MlpSpec,
    params: MlpParams,
    cache: ForwardCache,
    upstream: np.ndarray,
    wrt_raw: bool = False
) -> Tuple[MlpParams, np.ndarray]:
    """
    Reverse pass.

    Args:
        upstream: dL/d(output), same shape as the forward result (complex
            for the beam head); with ``wrt_raw`` it is dL/d(raw) instead
        wrt_raw: skip the head

    Returns:
        (parameter gradients summed over the batch, input gradient)
    """
    g = np.asarray(upstream)
    if not cache.batched:
        g = g[np.newaxis, ...]
    if not wrt_raw:
        if spec.head is Head.SIGMOID_OFFSET:
            p = cache.output
            g = g * p * (1.0 - p)
        elif spec.head is Head.SCALED_TANH:
            t = cache.output / HALF_PI
            g = g * HALF_PI * (1.0 - t * t)
        elif spec.head is Head.BEAM_NORMALIZED:
            g = beam_normalize_backward(cache.raw, g)
    g = np.asarray(g, dtype=np.float64)

    n_layers = len(params.weights)
    grad_w: List[np.ndarray] = [np.empty(0)] * n_layers
    grad_b: List[np.ndarray] = [np.empty(0)] * n_layers
    for i in range(n_layers - 1, -1, -1):
        grad_w[i] = cache.inputs[i].T @ g
        grad_b[i] = g.sum(axis=0)
        g = g @ params.weights[i].T
        if i > 0:
            g = g * elu_grad(cache.preacts[i - 1])
    grad_input = g if cache.batched else g[0]
    return MlpParams(weights=grad_w, biases=grad_b), grad_input


def backward(
    spec: MlpSpec,
    params: MlpParams,
    x: np.ndarray,
    upstream: np.ndarray,
    offset=0.0
) -> Tuple[MlpParams, np.ndarray]:
    """Exact gradients of <upstream, forward(x)> with respect to params and x."""
    _, cache = forward_cached(spec, params, x, offset)
    return backward_cached(spec, params, cache, upstream)


__all__ = [
    "Head",
    "MlpSpec",
    "MlpParams",
    "ForwardCache",
    "init_params",
    "elu",
    "elu_grad",
    "beam_normalize",
    "beam_normalize_backward",
    "forward",
    "forward_cached",
    "backward",
    "backward_cached",
]
