"""
Metrics, sweeps and result files.

Submodules:
    - metrics: BER/BMI, P_d/P_f, RMSE/bias, CRB and region-power rows
    - reporting: metrics/beam-pattern CSV and run manifest
    - sweeps: trade-off sweeps over w_s (imports the training loop)
"""

from .metrics import MetricRow, eval_beampattern, eval_comm, eval_sensing
from .reporting import (
    METRIC_COLUMNS,
    PATTERN_COLUMNS,
    read_beampattern_csv,
    read_metrics_csv,
    write_beampattern_csv,
    write_manifest,
    write_metrics_csv,
)

__all__ = [
    "MetricRow",
    "eval_beampattern",
    "eval_comm",
    "eval_sensing",
    "METRIC_COLUMNS",
    "PATTERN_COLUMNS",
    "read_beampattern_csv",
    "read_metrics_csv",
    "write_beampattern_csv",
    "write_manifest",
    "write_metrics_csv",
]
