"""
Multi-system sweeps.

``train_system`` runs the full training schedule for one trade-off weight;
``tradeoff_sweep`` repeats it over the configured w_s grid and evaluates
every trained system (region power, BER/BMI, P_d/P_f, RMSE/bias) together
with the baselines that use the same beam. Systems trained with the legacy
angle loss are reported under ``nn-legacy``.

Every sweep point gets its own stream ``seed.child(point index, ...)``;
points are independent and rows come out in sweep-coordinate order.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..config import ExperimentConfig
from ..core.rng import SeededRng
from ..simulation.kernel import JcasSystem
from ..simulation.scheduler import TrainSchedule
from ..training.losses import AngleLoss
from ..training.trainer import Trainer
from .metrics import MetricRow, eval_beampattern, eval_comm, eval_sensing

logger = logging.getLogger(__name__)

_TRAIN_STREAM = 0
_EVAL_STREAM = 1


@dataclass
class SweepResult:
    """Metric rows and beam-pattern rows of a sweep."""
    metrics: List[MetricRow] = field(default_factory=list)
    patterns: List[Dict[str, Any]] = field(default_factory=list)

    def extend(self, other: "SweepResult") -> None:
        self.metrics.extend(other.metrics)
        self.patterns.extend(other.patterns)


def train_system(
    config: ExperimentConfig,
    schedule: TrainSchedule,
    w_s: float,
    seed: SeededRng,
    angle_loss: Optional[AngleLoss] = None,
    checkpoint_dir: Optional[Path] = None,
    log_path: Optional[Path] = None
) -> JcasSystem:
    """Initialize, train and calibrate one system."""
    system = JcasSystem(
        config.system_config(angle_loss),
        rng=seed.child(_TRAIN_STREAM),
        lr=schedule.lr,
    )
    trainer = Trainer(
        system,
        schedule,
        w_s,
        seed,
        p_f=config.evaluation.p_f,
        log_path=log_path,
        checkpoint_dir=checkpoint_dir,
        config_hash=config.config_hash(),
    )
    trainer.run()
    return system


def evaluate_system(
    system: JcasSystem,
    config: ExperimentConfig,
    w_s: Optional[float],
    rng: SeededRng,
    label: str = "nn",
    include_baselines: bool = True
) -> SweepResult:
    """All metrics of one trained system on the configured grids."""
    ev = config.evaluation
    pattern, power_rows = eval_beampattern(
        system.beam(),
        system.config.sensing_region,
        system.config.comm_region,
        ev.pattern_grid,
        w_s=w_s,
        method=label,
    )
    methods = ("oracle", "nn") if include_baselines else ("nn",)
    comm_rows = eval_comm(system, ev.comm_snr_db, ev.comm_symbols, rng.child(0), methods=methods, w_s=w_s)
    sense_rows = eval_sensing(
        system, ev.sense_snr_db, ev.n_win, ev.sense_scenes, rng.child(1),
        p_f=ev.p_f, w_s=w_s, nn_label=label,
    )
    if label != "nn":
        comm_rows = [_relabel(row, label) for row in comm_rows]
    if not include_baselines:
        sense_rows = [row for row in sense_rows if row.method == label]
    return SweepResult(power_rows + comm_rows + sense_rows, pattern)


def _relabel(row: MetricRow, label: str) -> MetricRow:
    if row.method != "nn":
        return row
    data = row.to_dict()
    data["method"] = label
    return MetricRow(**data)


def tradeoff_sweep(
    config: ExperimentConfig,
    schedule: TrainSchedule,
    seed: SeededRng,
    out_dir: Optional[Path] = None
) -> SweepResult:
    """
    Train and evaluate one system per w_s in the configured grid.

    With ``evaluation.include_legacy`` each weight is trained a second time
    with the legacy angle loss; those rows carry ``method = nn-legacy`` and
    skip the baselines already reported for the normalized system.
    """
    variants = [(AngleLoss.NORMALIZED, "nn")]
    if config.evaluation.include_legacy:
        variants.append((AngleLoss.LEGACY, "nn-legacy"))

    result = SweepResult()
    for i, w_s in enumerate(config.evaluation.w_s_grid):
        for j, (angle_loss, label) in enumerate(variants):
            logger.info(f"Sweep point w_s={w_s} ({label}): training")
            point_dir = out_dir / f"w_s={w_s}" / label if out_dir is not None else None
            system = train_system(
                config,
                schedule,
                w_s,
                seed.child(_TRAIN_STREAM, i, j),
                angle_loss=angle_loss,
                checkpoint_dir=point_dir,
                log_path=point_dir / "train.log" if point_dir is not None else None,
            )
            result.extend(evaluate_system(
                system, config, w_s, seed.child(_EVAL_STREAM, i), label=label, include_baselines=j == 0
            ))
    return result


__all__ = ["SweepResult", "train_system", "evaluate_system", "tradeoff_sweep"]
