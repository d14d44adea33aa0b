"""
Three-phase training loop.

    pretrain   phase 1 with L_detect = 0, phase 2 with L_angle = 0
    finetune   full loss (same hyperparameters)
    limit      weights frozen, thresholds calibrated per N_win

Each optimizer step draws its batch from the stream
``seed.child(phase index, step)``, so a run resumed from a phase checkpoint
replays exactly the trajectory of an uninterrupted run. Only components on
the active loss path are stepped: the detection network sits out phase 1 and
the angle network sits out phase 2.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..core.errors import TrainingError
from ..core.rng import SeededRng
from ..neural.checkpoint import load_checkpoint, save_checkpoint
from ..neural.optim import adam_step
from ..simulation.kernel import JcasSystem
from ..simulation.scheduler import Phase, Scheduler, TrainSchedule
from .calibration import CalibrationTable, calibrate_offsets
from .losses import LossBreakdown, TradeoffConfig

logger = logging.getLogger(__name__)

_ACTIVE = {
    Phase.PRETRAIN_ANGLE: ("beamformer", "decoder", "angle"),
    Phase.PRETRAIN_DETECT: ("beamformer", "decoder", "detection"),
    Phase.FINETUNE: ("beamformer", "decoder", "angle", "detection"),
}


class TrainLog:
    """Append-only JSON-lines training log; no wall-clock fields."""

    def __init__(self, path: Optional[Path]):
        self.path = Path(path) if path is not None else None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    def write(self, record: Dict) -> None:
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, sort_keys=True) + "\n")


def calibrate_thresholds(
    system: JcasSystem,
    p_f: float,
    n_win_range: Tuple[int, int],
    n_samples: int,
    rng: SeededRng,
    sense_snr_db_range: Tuple[float, float] = (-10.0, 10.0)
) -> CalibrationTable:
    """
    Limit phase: per-N_win offsets from target-absent runs of the frozen system.

    The result is stored on ``system.calibration`` and returned.
    """
    lo, hi = n_win_range

    def null_logits(n_win: int, count: int, stream: SeededRng) -> np.ndarray:
        return system.null_logits(n_win, count, stream, sense_snr_db_range)

    table = calibrate_offsets(null_logits, p_f, range(lo, hi + 1), n_samples, rng)
    system.calibration = table
    return table


class Trainer:
    """
    Runs the training phases of one system.

    Example:
        >>> trainer = Trainer(system, schedule_for("desk"), w_s=0.5, seed=SeededRng(1))
        >>> history = trainer.run()
    """

    def __init__(
        self,
        system: JcasSystem,
        schedule: TrainSchedule,
        w_s: float,
        seed: SeededRng,
        p_f: float = 1e-2,
        log_path: Optional[Path] = None,
        checkpoint_dir: Optional[Path] = None,
        config_hash: str = ""
    ):
        TradeoffConfig(w_s)
        self.system = system
        system.w_s = w_s
        self.schedule = schedule
        self.w_s = w_s
        self.seed = seed
        self.p_f = p_f
        self.log = TrainLog(log_path)
        self.checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
        self.config_hash = config_hash
        self.scheduler = Scheduler(schedule)
        for component in system.components.values():
            component.adam.lr = schedule.lr

    def step(self, phase: Phase, step: int) -> LossBreakdown:
        """One optimizer step of ``phase``."""
        schedule = self.schedule
        batch = self.system.draw_batch(
            schedule.batch_size(phase, step),
            schedule.n_win_range,
            schedule.sense_snr_db_range,
            schedule.comm_snr_db_range,
            self.seed.child(phase.index, step),
        )
        try:
            breakdown, grads, offset = self.system.loss_and_grads(
                batch, self.w_s, detect_on=phase.detect_on, angle_on=phase.angle_on
            )
            for name in _ACTIVE[phase]:
                if name not in grads:
                    continue
                component = self.system.components[name]
                component.params, component.adam = adam_step(
                    component.adam, component.params, grads[name], name=name
                )
        except TrainingError as exc:
            logger.error(f"{phase.value} step {step}: {exc}", exc_info=True)
            raise TrainingError(f"{phase.value} step {step}: {exc}") from exc

        self.scheduler.advance(phase, batch.n_symbols)
        self.log.write({
            "phase": phase.value,
            "step": step,
            "seed": self.seed.seed,
            "offset": offset,
            **breakdown.to_dict(),
        })
        if self.scheduler.should_log():
            d = self.scheduler.get_diagnostics()
            logger.info(
                f"{phase.value} step {d['phase_step']}/{d['phase_steps']}: "
                f"total={breakdown.total:.5f} comm={breakdown.comm:.5f} "
                f"detect={breakdown.detect:.5f} angle={breakdown.angle:.5f}"
            )
        return breakdown

    def train_phase(self, phase: Phase) -> List[LossBreakdown]:
        steps = self.schedule.steps(phase)
        logger.info(f"Starting {phase.value}: {steps} steps of {self.schedule.batch} symbols")
        history = [self.step(phase, i) for i in range(steps)]
        self._checkpoint(phase)
        return history

    def pretrain(self) -> List[LossBreakdown]:
        return self.train_phase(Phase.PRETRAIN_ANGLE) + self.train_phase(Phase.PRETRAIN_DETECT)

    def finetune(self) -> List[LossBreakdown]:
        return self.train_phase(Phase.FINETUNE)

    def limit(self) -> CalibrationTable:
        logger.info(f"Calibrating thresholds for P_f={self.p_f}")
        table = calibrate_thresholds(
            self.system,
            self.p_f,
            self.schedule.n_win_range,
            self.schedule.calibration_symbols,
            self.seed.child(Phase.LIMIT.index),
            self.schedule.sense_snr_db_range,
        )
        self._checkpoint(Phase.LIMIT)
        return table

    def run(self, start: Phase = Phase.PRETRAIN_ANGLE) -> Dict[str, List[LossBreakdown]]:
        """Run every phase from ``start`` on; returns per-phase loss histories."""
        history: Dict[str, List[LossBreakdown]] = {}
        for phase in Scheduler.phases(start):
            if phase is Phase.LIMIT:
                self.limit()
            else:
                history[phase.value] = self.train_phase(phase)
        return history

    def checkpoint_path(self, phase: Phase) -> Optional[Path]:
        if self.checkpoint_dir is None:
            return None
        return self.checkpoint_dir / f"{phase.value}.ckpt"

    def _checkpoint(self, phase: Phase) -> None:
        path = self.checkpoint_path(phase)
        if path is None:
            return
        calibration = self.system.calibration.to_dict() if self.system.calibration else None
        save_checkpoint(
            path,
            self.system.components,
            seed=self.seed.seed,
            phase=phase.value,
            config_hash=self.config_hash,
            calibration=calibration,
            extra={"w_s": self.w_s},
        )

    @staticmethod
    def resume(
        system: JcasSystem,
        checkpoint: Path,
        schedule: TrainSchedule,
        w_s: float,
        seed: SeededRng,
        **kwargs
    ) -> Tuple["Trainer", Optional[Phase]]:
        """
        Restore components from a phase checkpoint.

        Returns the trainer and the phase to continue with (None when the
        checkpoint already holds a calibrated system).
        """
        state = load_checkpoint(checkpoint)
        system.components = state.components
        if state.calibration is not None:
            system.calibration = CalibrationTable.from_dict(state.calibration)
        done = Phase(state.phase)
        following = [p for p in Phase if p.index == done.index + 1]
        return Trainer(system, schedule, w_s, seed, **kwargs), (following[0] if following else None)


def pretrain(system: JcasSystem, schedule: TrainSchedule, rng: SeededRng, w_s: float = 0.5) -> JcasSystem:
    """Both pre-training phases; returns the trained system."""
    Trainer(system, schedule, w_s, rng).pretrain()
    return system


def finetune(system: JcasSystem, schedule: TrainSchedule, w_s: float, rng: SeededRng) -> JcasSystem:
    """Joint fine-tuning with the full loss."""
    Trainer(system, schedule, w_s, rng).finetune()
    return system


__all__ = [
    "Trainer",
    "TrainLog",
    "calibrate_thresholds",
    "pretrain",
    "finetune",
]
