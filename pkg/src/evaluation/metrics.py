"""
Link-level metrics for trained systems and baselines.

Every metric is reported as a ``MetricRow`` carrying the swept coordinates,
the Monte-Carlo count and a standard error:

    ber            binomial standard error over all bits
    bmi            standard error of the per-symbol BMI contributions
    p_d, p_f       binomial standard error over target-present/absent scenes
    rmse           delta-method standard error sqrt(Var(e^2) / n) / (2 RMSE)
    bias           standard error of the mean angle error
    crb            square root of the mean bound over target-present scenes

SNR columns: ``snr_db`` is the raw sigma ratio, ``snr_corrected_db`` adds
the mean beamforming gain over the relevant region.

Baselines and networks are evaluated on the same realizations at every grid
point; each point draws from its own child stream.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..classic.bounds import CrbInputs, crb
from ..classic.demapper import bmi_estimate, exact_llr, hard_decision, mmse_equalize
from ..classic.detection import np_detect_batch
from ..classic.esprit import esprit_aoa_batch
from ..core.errors import CalibrationError, ConfigurationError, PreconditionError
from ..core.rng import SeededRng
from ..physics.channel import (
    CommLinkParams,
    SenseLinkParams,
    acm_batch,
    draw_comm,
    sample_scene_batch,
    sense_channel_batch,
)
from ..physics.waveform import (
    AngleRegion,
    BeamWeights,
    beam_gain,
    beam_power_fractions,
    mean_beam_gain,
    modulate,
    random_bits,
)
from ..simulation.kernel import JcasSystem
from ..training.calibration import decide

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricRow:
    """
    One metric value at one sweep coordinate.

    Attributes:
        snr_db: raw SNR (dB) or None
        snr_corrected_db: beamforming-gain corrected SNR (dB) or None
        n_win: window length or None
        w_s: trade-off weight of the evaluated system or None
        method: producer of the value (nn, oracle, np, esprit, crb, ...)
        metric: metric name
        value: metric value
        n: Monte-Carlo count
        stderr: standard error (0 for exact values)
    """
    snr_db: Optional[float]
    snr_corrected_db: Optional[float]
    n_win: Optional[int]
    w_s: Optional[float]
    method: str
    metric: str
    value: float
    n: int
    stderr: float

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionError(f"Metric row needs a count >= 1, got {self.n}")
        if not self.stderr >= 0:
            raise PreconditionError(f"Standard error must be non-negative, got {self.stderr}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def proportion(hits: np.ndarray) -> Tuple[float, float, int]:
    """(rate, binomial standard error, count)."""
    hits = np.asarray(hits, dtype=bool).ravel()
    n = hits.size
    p = float(hits.mean())
    return p, float(np.sqrt(p * (1.0 - p) / n)), n


def rmse_stats(errors: np.ndarray) -> Tuple[float, float, int]:
    errors = np.asarray(errors, dtype=np.float64)
    n = errors.size
    squared = errors ** 2
    value = float(np.sqrt(squared.mean()))
    spread = float(squared.std(ddof=1)) if n > 1 else 0.0
    stderr = spread / np.sqrt(n) / (2.0 * value) if value > 0 else 0.0
    return value, float(stderr), n


def bias_stats(errors: np.ndarray) -> Tuple[float, float, int]:
    errors = np.asarray(errors, dtype=np.float64)
    n = errors.size
    spread = float(errors.std(ddof=1)) if n > 1 else 0.0
    return float(errors.mean()), spread / np.sqrt(n), n


def _db(value: float) -> float:
    return float(10.0 * np.log10(value))


def _row(coords: Dict[str, Any], method: str, metric: str, stats: Tuple[float, float, int]) -> MetricRow:
    value, stderr, n = stats
    return MetricRow(method=method, metric=metric, value=float(value), n=int(n), stderr=float(stderr), **coords)


def eval_comm(
    system: JcasSystem,
    snr_db_grid: Sequence[float],
    n_symbols: int,
    rng: SeededRng,
    methods: Iterable[str] = ("oracle", "nn"),
    w_s: Optional[float] = None
) -> List[MetricRow]:
    """
    BER and BMI over a raw SNR_c grid.

    ``oracle`` uses the exact log-MAP demapper, ``nn`` the trained decoder;
    both see identical channel realizations at each point.
    """
    if n_symbols < 1:
        raise ConfigurationError(f"eval-comm needs at least one symbol per point, got {n_symbols}")
    cfg = system.config
    constellation = system.constellation
    v = system.beam()
    corrected = mean_beam_gain(v, cfg.comm_region)
    methods = tuple(methods)
    rows: List[MetricRow] = []

    for i, snr_db in enumerate(snr_db_grid):
        generator = rng.child(i).generator()
        noise_power = cfg.fading_power / 10.0 ** (snr_db / 10.0)
        params = CommLinkParams(cfg.fading_power, noise_power, cfg.comm_region, cfg.per_symbol_angle)
        bits = random_bits(n_symbols, constellation, generator)
        x = modulate(bits, constellation)
        z, realization = draw_comm(x, v, params, generator)
        z_eq = mmse_equalize(z, realization.kappa, noise_power)
        coords = {
            "snr_db": float(snr_db),
            "snr_corrected_db": float(snr_db) + _db(corrected),
            "n_win": None,
            "w_s": w_s,
        }
        for method in methods:
            if method == "oracle":
                llrs = exact_llr(z_eq, realization.kappa, noise_power, constellation)
            elif method == "nn":
                llrs = system.decode(z_eq, realization.kappa, noise_power)
            else:
                raise ConfigurationError(f"Unknown demapper '{method}'")
            errors = hard_decision(llrs) != bits
            rows.append(_row(coords, method, "ber", proportion(errors)))
            per_symbol = bits.shape[1] - np.sum(
                np.logaddexp(0.0, -(1.0 - 2.0 * bits) * llrs), axis=1
            ) / np.log(2.0)
            bmi = bmi_estimate(llrs.T, bits.T)
            stderr = float(per_symbol.std(ddof=1) / np.sqrt(n_symbols)) if n_symbols > 1 else 0.0
            rows.append(_row(coords, method, "bmi", (bmi, stderr, n_symbols)))
        logger.info(f"eval-comm SNR_c={snr_db} dB done ({n_symbols} symbols)")
    return rows


def _crb_values(v: np.ndarray, angles: np.ndarray, noise_power: float, reflection_power: float, n_win: int) -> np.ndarray:
    k = v.shape[0]
    gains = beam_gain(v, angles)
    values = []
    for angle, gain in zip(np.atleast_1d(angles), np.atleast_1d(gains)):
        if gain <= 0:
            continue
        values.append(crb(CrbInputs(float(angle), noise_power, reflection_power, float(gain), k, n_win)))
    return np.asarray(values)


def eval_sensing(
    system: JcasSystem,
    snr_db_grid: Sequence[float],
    n_win_grid: Sequence[int],
    n_scenes: int,
    rng: SeededRng,
    p_f: float = 1e-2,
    include_nn: bool = True,
    w_s: Optional[float] = None,
    nn_label: str = "nn"
) -> List[MetricRow]:
    """
    Detection and angle metrics over (raw SNR_s, N_win) grid points.

    Rows: P_d/P_f for the calibrated network (``nn_label``) and the NP
    detector (``np``); RMSE/bias for the network and ESPRIT (``esprit``);
    sqrt of the mean CRB (``crb``).

    Raises:
        CalibrationError: the network is evaluated without calibrated thresholds
    """
    if n_scenes < 1:
        raise ConfigurationError(f"eval-sensing needs at least one scene per point, got {n_scenes}")
    if include_nn and system.calibration is None:
        raise CalibrationError("eval-sensing needs calibrated detection thresholds; run calibrate first")
    cfg = system.config
    v = system.beam()
    weights = v.weights
    k = cfg.antennas
    corrected = mean_beam_gain(v, cfg.sensing_region)
    rows: List[MetricRow] = []

    for i, snr_db in enumerate(snr_db_grid):
        noise_power = cfg.reflection_power / 10.0 ** (snr_db / 10.0)
        params = SenseLinkParams(cfg.reflection_power, noise_power, cfg.sensing_region, cfg.target_prior)
        for j, n_win in enumerate(n_win_grid):
            generator = rng.child(i, j).generator()
            lengths = np.full(n_scenes, int(n_win))
            bits = random_bits(n_scenes * n_win, system.constellation, generator)
            x_windows = modulate(bits, system.constellation).reshape(n_scenes, n_win)
            scenes = sample_scene_batch(params, lengths, generator)
            z = sense_channel_batch(x_windows, weights, scenes, generator)
            corr = acm_batch(z, lengths)
            present = scenes.present
            coords = {
                "snr_db": float(snr_db),
                "snr_corrected_db": float(snr_db) + _db(corrected),
                "n_win": int(n_win),
                "w_s": w_s,
            }

            decisions = {"np": np_detect_batch(z, noise_power, lengths, p_f)}
            estimates = {"esprit": esprit_aoa_batch(corr)}
            if include_nn:
                noise_std = np.full(n_scenes, np.sqrt(noise_power))
                logits, angles = system.sense(corr, lengths, noise_std)
                decisions[nn_label] = decide(logits, system.calibration.offsets_for(lengths))
                estimates[nn_label] = angles

            for method, detected in decisions.items():
                if present.any():
                    rows.append(_row(coords, method, "p_d", proportion(detected[present])))
                if (~present).any():
                    rows.append(_row(coords, method, "p_f", proportion(detected[~present])))
            if present.any():
                for method, angles in estimates.items():
                    errors = angles[present] - scenes.angles[present]
                    errors = errors[np.isfinite(errors)]
                    if errors.size == 0:
                        continue
                    rows.append(_row(coords, method, "rmse", rmse_stats(errors)))
                    rows.append(_row(coords, method, "bias", bias_stats(errors)))
                bounds = _crb_values(
                    weights, scenes.angles[present], noise_power, cfg.reflection_power, int(n_win)
                )
                if bounds.size:
                    rows.append(_row(coords, "crb", "rmse", (float(np.sqrt(bounds.mean())), 0.0, bounds.size)))
        logger.info(f"eval-sensing SNR_s={snr_db} dB done ({len(n_win_grid)} window lengths)")
    return rows


def eval_beampattern(
    v: BeamWeights,
    sensing: AngleRegion,
    comm: AngleRegion,
    grid: int = 721,
    w_s: Optional[float] = None,
    method: str = "nn"
) -> Tuple[List[Dict[str, float]], List[MetricRow]]:
    """
    Beam pattern on a uniform angle grid plus region power fractions.

    Returns:
        (pattern rows {w_s, angle_deg, gain, gain_db}, region_power rows for
        the sensing, comm and outside fractions)
    """
    angles = np.linspace(-np.pi / 2, np.pi / 2, grid)
    gains = beam_gain(v, angles)
    with np.errstate(divide="ignore"):
        gains_db = 10.0 * np.log10(gains)
    pattern = [
        {"w_s": w_s, "angle_deg": float(np.rad2deg(a)), "gain": float(g), "gain_db": float(d)}
        for a, g, d in zip(angles, gains, gains_db)
    ]
    fractions = beam_power_fractions(v, sensing, comm, grid)
    coords = {"snr_db": None, "snr_corrected_db": None, "n_win": None, "w_s": w_s}
    rows = [
        _row(coords, method, f"region_power_{name}", (value, 0.0, grid))
        for name, value in fractions.items()
    ]
    return pattern, rows


__all__ = [
    "MetricRow",
    "proportion",
    "rmse_stats",
    "bias_stats",
    "eval_comm",
    "eval_sensing",
    "eval_beampattern",
]
