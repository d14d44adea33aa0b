"""
End-to-end JCAS system.

``JcasSystem`` wires the transmitter, both channels and the four network
components into one differentiable pipeline:

    beamformer -> v
    comm:    z = (a(phi)^T v) alpha_c x + n -> MMSE -> decoder -> LLRs
    sensing: Z = T (a(theta)^T v) alpha_s x a(theta) + N -> Corr -> features
             -> detection logit, angle estimate

A ``TrainingBatch`` freezes every random quantity that does not depend on
the parameters (bits, angles, fades, noise, scenes). ``loss_and_grads`` is
therefore a deterministic function of the parameters for a given batch,
which is what the optimizer and the finite-difference checks rely on.

Gradients use g = dL/dRe + j dL/dIm for complex intermediates. The beam
collects contributions from both receivers:

    comm     g_kappa from the equalizer and the decoder noise input,
             g_h = g_kappa conj(alpha_c), g_v += A_c^H g_h
    sensing  g_Z = (G + G^H) Z / N_win from the correlation gradient G,
             g_g = sum conj(T S) g_Z, g_v += A_s^H g_g
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..core.errors import CalibrationError, ConfigurationError, TrainingError
from ..core.numerics import sample_complex_normal
from ..core.rng import RngLike, SeededRng, as_generator
from ..classic.demapper import mmse_equalize
from ..neural.components import (
    Component,
    ComponentKind,
    FeatureScaling,
    beamformer_inputs,
    decoder_inputs,
    make_component,
    sensing_features,
)
from ..neural.mlp import MlpParams
from ..physics.channel import (
    SceneBatch,
    SenseLinkParams,
    acm_batch,
    partition_windows,
    reflection_template,
    sample_scene_batch,
    window_symbols,
)
from ..physics.waveform import (
    AngleRegion,
    BeamWeights,
    Constellation,
    build_qam,
    modulate,
    random_bits,
    steering_vector,
)
from ..training.calibration import CalibrationTable, decide, threshold_offset
from ..training.losses import (
    AngleLoss,
    LossBreakdown,
    angle_loss_grad,
    loss_comm_grad,
    loss_detect_grad,
    total_loss,
)

logger = logging.getLogger(__name__)

COMPONENT_ORDER = ("beamformer", "decoder", "angle", "detection")


@dataclass(frozen=True)
class SystemConfig:
    """
    Physical setup and model choices of a JCAS system.

    Attributes:
        antennas: K
        order: QAM order M
        comm_region: receiver angle region
        sensing_region: target angle region
        fading_power: sigma_c^2
        reflection_power: sigma_s^2
        target_prior: P(T = 1)
        per_symbol_angle: redraw phi per symbol (else once per window)
        beam_mode: "network" (4-input beamformer) or "direct" (trainable vector)
        angle_loss: normalized or legacy angle term
        p_f: false-alarm target used for the per-batch training offset
    """
    antennas: int = 16
    order: int = 16
    comm_region: AngleRegion = field(default_factory=lambda: AngleRegion.from_degrees(30.0, 50.0))
    sensing_region: AngleRegion = field(default_factory=lambda: AngleRegion.from_degrees(-20.0, 20.0))
    fading_power: float = 1.0
    reflection_power: float = 1.0
    target_prior: float = 0.5
    per_symbol_angle: bool = True
    beam_mode: str = "network"
    angle_loss: AngleLoss = AngleLoss.NORMALIZED
    p_f: float = 1e-2

    def __post_init__(self):
        if self.antennas < 2:
            raise ConfigurationError(f"Need K >= 2 antennas, got {self.antennas}")
        if self.beam_mode not in ("network", "direct"):
            raise ConfigurationError(f"Unknown beam mode '{self.beam_mode}'")

    def sense_params(self, noise_power: float = 1.0) -> SenseLinkParams:
        return SenseLinkParams(
            reflection_power=self.reflection_power,
            noise_power=noise_power,
            region=self.sensing_region,
            target_prior=self.target_prior,
        )


@dataclass
class TrainingBatch:
    """
    Parameter-independent randomness of one optimizer step.

    Communication (N symbols): bits, symbols, receiver angles, fades, noise.
    Sensing (W windows): the same symbols cut into windows, the scenes and
    the receiver noise (already scaled and masked).
    """
    bits: np.ndarray
    x: np.ndarray
    comm_angles: np.ndarray
    fading: np.ndarray
    comm_noise: np.ndarray
    comm_noise_power: np.ndarray
    x_windows: np.ndarray
    scenes: SceneBatch
    sense_noise: np.ndarray

    @property
    def n_symbols(self) -> int:
        return int(self.x.shape[0])

    @property
    def noise_std(self) -> np.ndarray:
        return np.sqrt(self.scenes.noise_power)


@dataclass
class ForwardResult:
    """Outputs and intermediates of ``JcasSystem.forward``."""
    v: np.ndarray
    kappa: np.ndarray
    z_comm: np.ndarray
    z_eq: np.ndarray
    llrs: np.ndarray
    z_sense: np.ndarray
    corr: np.ndarray
    logits: np.ndarray
    angles: np.ndarray
    offset: float
    caches: Dict[str, object] = field(default_factory=dict)


def _log_uniform_power(generator: np.random.Generator, signal_power: float, snr_db_range, size) -> np.ndarray:
    snr_db = generator.uniform(snr_db_range[0], snr_db_range[1], size=size)
    return signal_power / 10.0 ** (snr_db / 10.0)


class JcasSystem:
    """
    The trainable transmitter and receivers plus the channel models.

    Example:
        >>> system = JcasSystem(SystemConfig(antennas=4), rng=SeededRng(7))
        >>> batch = system.draw_batch(200, (1, 15), (-10, 10), (0, 25), SeededRng(7, 1))
        >>> breakdown, grads, offset = system.loss_and_grads(batch, w_s=0.5)
    """

    def __init__(
        self,
        config: SystemConfig,
        components: Optional[Dict[str, Component]] = None,
        rng: Optional[SeededRng] = None,
        lr: float = 1e-4,
        fixed_beam: Optional[BeamWeights] = None
    ):
        self.config = config
        self.constellation: Constellation = build_qam(config.order)
        self.scaling = FeatureScaling()
        self.fixed_beam = fixed_beam
        self.calibration: Optional[CalibrationTable] = None
        self.w_s: Optional[float] = None
        if components is None:
            components = self._init_components(rng if rng is not None else SeededRng(0), lr)
        self.components: Dict[str, Component] = components
        self._beam_inputs = beamformer_inputs(config.comm_region, config.sensing_region)

    def _init_components(self, rng: SeededRng, lr: float) -> Dict[str, Component]:
        k, m = self.config.antennas, self.config.order
        kinds = {
            "beamformer": ComponentKind.BEAMFORMER,
            "decoder": ComponentKind.DECODER,
            "angle": ComponentKind.ANGLE,
            "detection": ComponentKind.DETECTION,
        }
        components = {}
        for i, name in enumerate(COMPONENT_ORDER):
            direct = name == "beamformer" and self.config.beam_mode == "direct"
            components[name] = make_component(kinds[name], k, m, rng.child(i), lr=lr, direct=direct)
        logger.info(
            f"Initialized JCAS system K={k}, M={m}, beam_mode={self.config.beam_mode}, "
            f"parameters={sum(c.params.size for c in components.values())}"
        )
        return components

    # Inference

    def beam(self) -> BeamWeights:
        if self.fixed_beam is not None:
            return self.fixed_beam
        v, _ = self.components["beamformer"].forward_cached(self._beam_inputs)
        return BeamWeights.normalized(v)

    def decode(self, z_eq: np.ndarray, kappa: np.ndarray, noise_power) -> np.ndarray:
        """Decoder LLRs (N, n) for equalized samples."""
        inputs = decoder_inputs(z_eq, kappa, noise_power)
        llrs, _ = self.components["decoder"].forward_cached(inputs)
        return llrs

    def sense(self, corr: np.ndarray, n_win: np.ndarray, noise_std: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(detection logits, angle estimates) for stacked correlation matrices."""
        inputs = self.scaling.apply(sensing_features(corr, n_win, noise_std))
        _, det_cache = self.components["detection"].forward_cached(inputs)
        angles, _ = self.components["angle"].forward_cached(inputs)
        return det_cache.raw[:, 0], angles[:, 0]

    def detect(self, corr: np.ndarray, n_win: np.ndarray, noise_std: np.ndarray) -> np.ndarray:
        """Calibrated decisions (logit + T_off >= 0)."""
        if self.calibration is None:
            raise CalibrationError("Detection thresholds have not been calibrated")
        logits, _ = self.sense(corr, n_win, noise_std)
        return decide(logits, self.calibration.offsets_for(n_win))

    def null_logits(
        self,
        n_win: int,
        count: int,
        rng: RngLike,
        sense_snr_db_range: Tuple[float, float] = (-10.0, 10.0)
    ) -> np.ndarray:
        """Detection logits of ``count`` target-absent windows of length n_win."""
        generator = as_generator(rng)
        noise_power = _log_uniform_power(
            generator, self.config.reflection_power, sense_snr_db_range, count
        )
        k = self.config.antennas
        z = sample_complex_normal(generator, 1.0, (count, k, n_win))
        z *= np.sqrt(noise_power)[:, np.newaxis, np.newaxis]
        n = np.full(count, n_win)
        logits, _ = self.sense(acm_batch(z, n), n, np.sqrt(noise_power))
        return logits

    # Training

    def draw_batch(
        self,
        n_symbols: int,
        n_win_range: Tuple[int, int],
        sense_snr_db_range: Tuple[float, float],
        comm_snr_db_range: Tuple[float, float],
        rng: RngLike
    ) -> TrainingBatch:
        """Sample the parameter-independent part of one training batch."""
        generator = as_generator(rng)
        cfg = self.config
        bits = random_bits(n_symbols, self.constellation, generator)
        x = modulate(bits, self.constellation)

        n_win = partition_windows(n_symbols, n_win_range, generator)
        x_windows, window_index = window_symbols(x, n_win)

        comm_noise_power = _log_uniform_power(generator, cfg.fading_power, comm_snr_db_range, n_symbols)
        if cfg.per_symbol_angle:
            comm_angles = generator.uniform(cfg.comm_region.min, cfg.comm_region.max, size=n_symbols)
        else:
            per_window = generator.uniform(cfg.comm_region.min, cfg.comm_region.max, size=n_win.shape[0])
            comm_angles = per_window[window_index]
        fading = sample_complex_normal(generator, cfg.fading_power, n_symbols)
        comm_noise = sample_complex_normal(generator, 1.0, n_symbols) * np.sqrt(comm_noise_power)

        sense_noise_power = _log_uniform_power(
            generator, cfg.reflection_power, sense_snr_db_range, n_win.shape[0]
        )
        scenes = sample_scene_batch(cfg.sense_params(), n_win, generator, noise_power=sense_noise_power)
        sense_noise = sample_complex_normal(generator, 1.0, (n_win.shape[0], cfg.antennas, scenes.n_max))
        sense_noise *= np.sqrt(sense_noise_power)[:, np.newaxis, np.newaxis]
        sense_noise *= scenes.mask[:, np.newaxis, :]

        return TrainingBatch(
            bits=bits,
            x=x,
            comm_angles=comm_angles,
            fading=fading,
            comm_noise=comm_noise,
            comm_noise_power=comm_noise_power,
            x_windows=x_windows,
            scenes=scenes,
            sense_noise=sense_noise,
        )

    def forward(self, batch: TrainingBatch, offset: Optional[float] = None) -> ForwardResult:
        """
        Run the full pipeline on a batch.

        ``offset`` fixes the detection offset; by default it is recomputed
        from the target-absent logits of the batch.
        """
        k = self.config.antennas
        caches: Dict[str, object] = {}
        beamformer = self.components["beamformer"]
        if self.fixed_beam is not None:
            v = self.fixed_beam.weights
        else:
            v, caches["beamformer"] = beamformer.forward_cached(self._beam_inputs)

        # Communication receiver
        a_comm = steering_vector(batch.comm_angles, k)
        kappa = (a_comm @ v) * batch.fading
        z_comm = kappa * batch.x + batch.comm_noise
        z_eq = mmse_equalize(z_comm, kappa, batch.comm_noise_power)
        inputs = decoder_inputs(z_eq, kappa, batch.comm_noise_power)
        llrs, caches["decoder"] = self.components["decoder"].forward_cached(inputs)

        # Sensing receiver
        scenes = batch.scenes
        a_sense = steering_vector(scenes.angles, k)
        g = a_sense @ v
        template = reflection_template(batch.x_windows, scenes, k)
        caches["template"] = template
        caches["a_comm"], caches["a_sense"] = a_comm, a_sense
        z_sense = (scenes.present * g)[:, np.newaxis, np.newaxis] * template + batch.sense_noise
        corr = acm_batch(z_sense, scenes.n_win)
        features = self.scaling.apply(sensing_features(corr, scenes.n_win, batch.noise_std))
        _, caches["detection"] = self.components["detection"].forward_cached(features)
        angles, caches["angle"] = self.components["angle"].forward_cached(features)
        logits = caches["detection"].raw[:, 0]

        if offset is None:
            null = logits[~scenes.present]
            offset = threshold_offset(null, self.config.p_f) if null.size else 0.0

        return ForwardResult(
            v=v,
            kappa=kappa,
            z_comm=z_comm,
            z_eq=z_eq,
            llrs=llrs,
            z_sense=z_sense,
            corr=corr,
            logits=logits,
            angles=angles[:, 0],
            offset=float(offset),
            caches=caches,
        )

    def losses(
        self,
        batch: TrainingBatch,
        result: ForwardResult,
        w_s: float,
        detect_on: bool = True,
        angle_on: bool = True
    ) -> Tuple[LossBreakdown, Dict[str, np.ndarray]]:
        """Loss breakdown and the gradients of each term with respect to its network output."""
        scenes = batch.scenes
        comm, g_llr = loss_comm_grad(result.llrs, batch.bits)
        detect, g_logit = loss_detect_grad(result.logits, result.offset, scenes.present)
        angle, g_angle = angle_loss_grad(
            self.config.angle_loss,
            scenes.angles,
            result.angles,
            scenes.present,
            n_win=scenes.n_win,
            noise_std=batch.noise_std,
        )
        breakdown = total_loss(comm, detect, angle.value, w_s, detect_on=detect_on, angle_on=angle_on)
        if not np.isfinite(breakdown.total):
            raise TrainingError(f"Non-finite loss: {breakdown.to_dict()}")
        upstream = {
            "llrs": (1.0 - w_s) * g_llr,
            "logits": (w_s * g_logit) if detect_on else np.zeros_like(g_logit),
            "angles": (w_s * g_angle) if angle_on else np.zeros_like(g_angle),
        }
        return breakdown, upstream

    def backward(
        self,
        batch: TrainingBatch,
        result: ForwardResult,
        upstream: Dict[str, np.ndarray]
    ) -> Dict[str, MlpParams]:
        """Parameter gradients of every component."""
        caches = result.caches
        grads: Dict[str, MlpParams] = {}
        noise_power = batch.comm_noise_power
        scenes = batch.scenes

        # Decoder and the communication path back to kappa
        grads["decoder"], g_in = self.components["decoder"].backward_cached(
            caches["decoder"], upstream["llrs"]
        )
        g_zeq = g_in[:, 0] + 1j * g_in[:, 1]
        g_std = g_in[:, 2]
        kappa, z = result.kappa, result.z_comm
        spread = np.abs(kappa) ** 2 + noise_power
        std = np.sqrt(noise_power / spread)
        g_kappa = (
            np.conj(g_zeq) * noise_power * z / spread ** 2
            + g_zeq * kappa * (noise_power * np.conj(batch.x) - kappa * np.conj(batch.comm_noise)) / spread ** 2
            - g_std * std * kappa / spread
        )
        g_h = g_kappa * np.conj(batch.fading)
        g_v = caches["a_comm"].conj().T @ g_h

        # Sensing heads and the correlation matrix
        grads["detection"], g_feat_det = self.components["detection"].backward_cached(
            caches["detection"], upstream["logits"][:, np.newaxis], wrt_raw=True
        )
        grads["angle"], g_feat_ang = self.components["angle"].backward_cached(
            caches["angle"], upstream["angles"][:, np.newaxis]
        )
        g_flat = self.scaling.backward_corr(g_feat_det + g_feat_ang, batch.noise_std)
        k = self.config.antennas
        kk = k * k
        g_corr = (g_flat[:, :kk] + 1j * g_flat[:, kk:]).reshape(-1, k, k)
        g_corr_sym = g_corr + np.conj(np.swapaxes(g_corr, 1, 2))
        g_z = np.einsum("bkl,bln->bkn", g_corr_sym, result.z_sense)
        g_z /= scenes.n_win[:, np.newaxis, np.newaxis]
        g_g = scenes.present * np.einsum("bkn,bkn->b", np.conj(caches["template"]), g_z)
        g_v = g_v + caches["a_sense"].conj().T @ g_g

        if self.fixed_beam is None:
            grads["beamformer"], _ = self.components["beamformer"].backward_cached(
                caches["beamformer"], g_v
            )
        return grads

    def loss_and_grads(
        self,
        batch: TrainingBatch,
        w_s: float,
        detect_on: bool = True,
        angle_on: bool = True,
        offset: Optional[float] = None
    ) -> Tuple[LossBreakdown, Dict[str, MlpParams], float]:
        """Forward pass, loss breakdown and parameter gradients in one call."""
        result = self.forward(batch, offset=offset)
        breakdown, upstream = self.losses(batch, result, w_s, detect_on, angle_on)
        grads = self.backward(batch, result, upstream)
        return breakdown, grads, result.offset

    def parameter_count(self) -> int:
        return sum(c.params.size for c in self.components.values())


__all__ = [
    "SystemConfig",
    "TrainingBatch",
    "ForwardResult",
    "JcasSystem",
    "COMPONENT_ORDER",
]
