"""
Losses and threshold calibration.

The training loop itself lives in ``jcas_lab.training.trainer`` (it depends
on the system kernel, which in turn uses the losses defined here).
"""

from .calibration import (
    CalibrationTable,
    calibrate_offsets,
    decide,
    false_alarm_rate,
    threshold_offset,
)
from .losses import (
    AngleLoss,
    LossBreakdown,
    MaskedLoss,
    TradeoffConfig,
    loss_angle_legacy,
    loss_angle_normalized,
    loss_comm,
    loss_detect,
    total_loss,
)

__all__ = [
    "CalibrationTable",
    "calibrate_offsets",
    "decide",
    "false_alarm_rate",
    "threshold_offset",
    "AngleLoss",
    "LossBreakdown",
    "MaskedLoss",
    "TradeoffConfig",
    "loss_angle_legacy",
    "loss_angle_normalized",
    "loss_comm",
    "loss_detect",
    "total_loss",
]
