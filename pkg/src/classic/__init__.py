"""
Model-based baselines and bounds.

Submodules:
    - detection: Neyman-Pearson power detector
    - esprit: least-squares ESPRIT angle estimator
    - bounds: Cramer-Rao bound on the AoA variance
    - demapper: MMSE equalizer, exact LLRs, BMI and closed-form QAM BER
"""

from .bounds import CrbInputs, crb
from .demapper import bmi_estimate, exact_llr, hard_decision, mmse_equalize, qam_ber_awgn
from .detection import (
    DetectionDecision,
    np_detect,
    np_detect_batch,
    np_statistic,
    np_statistic_batch,
    np_threshold,
)
from .esprit import EspritEstimate, esprit_aoa, esprit_aoa_batch

__all__ = [
    "CrbInputs",
    "crb",
    "DetectionDecision",
    "np_detect",
    "np_detect_batch",
    "np_statistic",
    "np_statistic_batch",
    "np_threshold",
    "EspritEstimate",
    "esprit_aoa",
    "esprit_aoa_batch",
    "mmse_equalize",
    "exact_llr",
    "hard_decision",
    "bmi_estimate",
    "qam_ber_awgn",
]
