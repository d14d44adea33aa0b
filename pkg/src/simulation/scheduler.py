"""
Training schedule and phase bookkeeping.

Training runs in three phases, each over a budget of communication symbols
consumed in fixed-size batches:

    pretrain-angle    L_detect switched off (angle path trained)
    pretrain-detect   L_angle switched off (detection path trained)
    finetune          full loss
    limit             no updates; detection thresholds calibrated per N_win

Profiles:
    desk    1e6 symbols per pre-training phase, 2e6 fine-tuning (CI scale)
    paper   2.5e7 symbols per pre-training phase, 5e7 fine-tuning

Both profiles train with batch 1e4 and lr 1e-4; they differ only in the
symbol budgets.
"""

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, Tuple

from ..core.errors import ConfigurationError
from ..neural.optim import DEFAULT_LR


class Phase(Enum):
    """Training phases in execution order."""
    PRETRAIN_ANGLE = "pretrain-angle"
    PRETRAIN_DETECT = "pretrain-detect"
    FINETUNE = "finetune"
    LIMIT = "limit"

    @property
    def index(self) -> int:
        return list(Phase).index(self)

    @property
    def detect_on(self) -> bool:
        return self is not Phase.PRETRAIN_ANGLE

    @property
    def angle_on(self) -> bool:
        return self is not Phase.PRETRAIN_DETECT


@dataclass(frozen=True)
class TrainSchedule:
    """
    Budget and sampling ranges of one training run.

    Attributes:
        pretrain_symbols: symbols per pre-training phase
        finetune_symbols: symbols for fine-tuning
        batch: symbols per optimizer step
        lr: Adam learning rate
        n_win_range: inclusive range of sensing window lengths
        sense_snr_db_range: raw SNR_s range; sigma_ns is drawn log-uniformly
        comm_snr_db_range: raw SNR_c range; sigma_n is drawn log-uniformly
        calibration_symbols: target-absent windows per N_win in the limit phase
    """
    pretrain_symbols: int = 1_000_000
    finetune_symbols: int = 2_000_000
    batch: int = 10_000
    lr: float = DEFAULT_LR
    n_win_range: Tuple[int, int] = (1, 15)
    sense_snr_db_range: Tuple[float, float] = (-10.0, 10.0)
    comm_snr_db_range: Tuple[float, float] = (0.0, 25.0)
    calibration_symbols: int = 10_000

    def __post_init__(self):
        if min(self.pretrain_symbols, self.finetune_symbols, self.batch, self.calibration_symbols) < 1:
            raise ConfigurationError("Schedule counts must be at least 1")
        if self.lr < 0:
            raise ConfigurationError(f"Learning rate must be non-negative, got {self.lr}")
        lo, hi = self.n_win_range
        if not 1 <= lo <= hi:
            raise ConfigurationError(f"Invalid N_win range {self.n_win_range}")
        for name in ("sense_snr_db_range", "comm_snr_db_range"):
            a, b = getattr(self, name)
            if a > b:
                raise ConfigurationError(f"{name} must be increasing, got {(a, b)}")

    def symbols(self, phase: Phase) -> int:
        if phase is Phase.FINETUNE:
            return self.finetune_symbols
        if phase is Phase.LIMIT:
            return 0
        return self.pretrain_symbols

    def steps(self, phase: Phase) -> int:
        """Optimizer steps of a phase (the last batch may be partial)."""
        return math.ceil(self.symbols(phase) / self.batch)

    def batch_size(self, phase: Phase, step: int) -> int:
        remaining = self.symbols(phase) - step * self.batch
        return min(self.batch, remaining)

    def n_win_values(self) -> range:
        lo, hi = self.n_win_range
        return range(lo, hi + 1)


PROFILES: Dict[str, TrainSchedule] = {
    "desk": TrainSchedule(),
    "paper": TrainSchedule(pretrain_symbols=25_000_000, finetune_symbols=50_000_000),
}


def schedule_for(profile: str, **overrides: Any) -> TrainSchedule:
    """Profile schedule with optional field overrides."""
    if profile not in PROFILES:
        raise ConfigurationError(f"Unknown profile '{profile}'; choose one of {sorted(PROFILES)}")
    return replace(PROFILES[profile], **overrides) if overrides else PROFILES[profile]


class Scheduler:
    """
    Tracks progress through the phases of a schedule.

    Example:
        >>> scheduler = Scheduler(schedule_for("desk"))
        >>> for phase in scheduler.phases():
        ...     for step in range(scheduler.schedule.steps(phase)):
        ...         scheduler.advance(phase)
    """

    def __init__(self, schedule: TrainSchedule, log_interval: int = 50):
        self.schedule = schedule
        self.log_interval = log_interval
        self.phase = Phase.PRETRAIN_ANGLE
        self.step_count = 0
        self.phase_step = 0
        self.symbols_seen = 0

    @staticmethod
    def phases(start: Phase = Phase.PRETRAIN_ANGLE):
        return [p for p in Phase if p.index >= start.index]

    def advance(self, phase: Phase, symbols: int = 0) -> None:
        if phase is not self.phase:
            self.phase = phase
            self.phase_step = 0
        self.phase_step += 1
        self.step_count += 1
        self.symbols_seen += symbols

    def should_log(self) -> bool:
        last = self.phase_step == self.schedule.steps(self.phase)
        return last or self.phase_step % self.log_interval == 0

    def get_diagnostics(self) -> Dict[str, Any]:
        total = self.schedule.steps(self.phase)
        return {
            "phase": self.phase.value,
            "phase_step": self.phase_step,
            "phase_steps": total,
            "total_steps": self.step_count,
            "symbols_seen": self.symbols_seen,
            "progress": self.phase_step / max(1, total),
        }


__all__ = ["Phase", "TrainSchedule", "Scheduler", "PROFILES", "schedule_for"]
