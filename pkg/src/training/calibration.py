"""
Constant false-alarm calibration of the detection network.

For each window length the frozen system runs on target-absent scenes and
collects the detection logits L. With the logits sorted ascending and
k = floor((1 - p_f) N) + 1 (1-based), the threshold sits one ulp above L_(k),
the upper of the two order statistics bracketing the (1 - p_f) quantile,
and T_off is its negative. A scene is declared a detection when
L + T_off >= 0, the same statistic-at-or-above-threshold rule as the
Neyman-Pearson detector. At most N - k < p_f N of the calibration logits
reach the threshold, so the realized false-alarm rate undershoots rather
than overshoots p_f.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Tuple

import numpy as np

from ..core.errors import CalibrationError, DomainError
from ..core.rng import SeededRng

logger = logging.getLogger(__name__)

MIN_EXPECTED_FALSE_ALARMS = 10


@dataclass
class CalibrationTable:
    """
    Detection threshold offsets per window length.

    Attributes:
        p_f: target false-alarm probability
        offsets: N_win -> T_off
    """
    p_f: float
    offsets: Dict[int, float] = field(default_factory=dict)

    def offset(self, n_win: int) -> float:
        try:
            return self.offsets[int(n_win)]
        except KeyError:
            raise CalibrationError(f"No calibrated threshold for N_win = {n_win}") from None

    def offsets_for(self, n_win: np.ndarray) -> np.ndarray:
        return np.array([self.offset(n) for n in np.asarray(n_win)], dtype=np.float64)

    def covers(self, n_win_range: Tuple[int, int]) -> bool:
        lo, hi = n_win_range
        return all(n in self.offsets for n in range(lo, hi + 1))

    def to_dict(self) -> dict:
        return {"p_f": self.p_f, "offsets": dict(sorted(self.offsets.items()))}

    @staticmethod
    def from_dict(data: dict) -> "CalibrationTable":
        return CalibrationTable(
            p_f=float(data["p_f"]),
            offsets={int(k): float(v) for k, v in data["offsets"].items()},
        )


def threshold_offset(logits: np.ndarray, p_f: float) -> float:
    """T_off = -(upper (1 - p_f) order statistic of the null logits)."""
    if not 0.0 < p_f < 1.0:
        raise DomainError(f"False-alarm probability must lie in (0, 1), got {p_f}")
    logits = np.sort(np.asarray(logits, dtype=np.float64).ravel())
    n = logits.shape[0]
    if n == 0:
        raise DomainError("Cannot calibrate from an empty set of logits")
    k = min(int(np.floor((1.0 - p_f) * n)) + 1, n)
    return float(-np.nextafter(logits[k - 1], np.inf))


def decide(logits: np.ndarray, offset) -> np.ndarray:
    """Detection decisions L + T_off >= 0 (scalar or per-scene offsets)."""
    return np.asarray(logits, dtype=np.float64) + offset >= 0.0


def false_alarm_rate(logits: np.ndarray, offset: float) -> float:
    """Fraction of null logits declared detections."""
    return float(np.mean(decide(logits, offset)))


def calibrate_offsets(
    null_logits: Callable[[int, int, SeededRng], np.ndarray],
    p_f: float,
    n_win_values: Iterable[int],
    n_samples: int,
    rng: SeededRng
) -> CalibrationTable:
    """
    Build a table from a source of target-absent logits.

    Args:
        null_logits: (n_win, count, rng) -> detection logits of ``count``
            target-absent windows of length n_win
        p_f: target false-alarm probability
        n_win_values: window lengths to calibrate
        n_samples: null windows per length
        rng: root stream; each length draws from its own child stream
    """
    if n_samples < 1:
        raise DomainError(f"Calibration needs at least one sample, got {n_samples}")
    table = CalibrationTable(p_f=p_f)
    if n_samples * p_f < MIN_EXPECTED_FALSE_ALARMS:
        logger.warning(
            f"Calibration with {n_samples} samples expects only {n_samples * p_f:.1f} "
            f"false alarms per N_win (< {MIN_EXPECTED_FALSE_ALARMS}); thresholds are coarse"
        )
    for n_win in n_win_values:
        logits = null_logits(int(n_win), n_samples, rng.child(int(n_win)))
        offset = threshold_offset(logits, p_f)
        realized = false_alarm_rate(logits, offset)
        table.offsets[int(n_win)] = offset
        if realized == 0.0:
            logger.warning(f"N_win={n_win}: calibrated false-alarm rate is 0 (degenerate logits)")
        logger.info(f"N_win={n_win}: T_off={offset:.6f}, in-sample P_f={realized:.4g}")
    return table


__all__ = [
    "CalibrationTable",
    "threshold_offset",
    "decide",
    "false_alarm_rate",
    "calibrate_offsets",
    "MIN_EXPECTED_FALSE_ALARMS",
]
