"""
Experiment configuration.

A YAML file with one section per concern; every section rejects unknown keys
so that a typo fails loudly instead of silently running a default sweep.

    array:       antennas, order
    regions:     comm_deg, sensing_deg
    channel:     fading_power, reflection_power, target_prior, per_symbol_angle
    training:    profile, w_s, beam_mode, angle_loss, ranges, budget overrides
    evaluation:  p_f, SNR grids, N_win grid, w_s grid, Monte-Carlo counts
    output:      dir
    seed

``config_hash`` stamps runs with the SHA-256 of the canonical JSON dump.
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .core.errors import ConfigurationError
from .physics.waveform import SUPPORTED_QAM_ORDERS, AngleRegion
from .simulation.kernel import SystemConfig
from .simulation.scheduler import PROFILES, TrainSchedule, schedule_for
from .training.losses import AngleLoss

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_region(value: Tuple[float, float]) -> Tuple[float, float]:
    lo, hi = value
    if not -90.0 <= lo <= hi <= 90.0:
        raise ValueError(f"region {value} must satisfy -90 <= min <= max <= 90 (degrees)")
    return value


def _check_range(value: Tuple[float, float]) -> Tuple[float, float]:
    if value[0] > value[1]:
        raise ValueError(f"range {value} must be increasing")
    return value


class ArraySection(_Section):
    antennas: int = Field(16, ge=2)
    order: int = 16

    @field_validator("order")
    @classmethod
    def _order(cls, value: int) -> int:
        if value not in SUPPORTED_QAM_ORDERS:
            raise ValueError(f"QAM order must be one of {SUPPORTED_QAM_ORDERS}")
        return value


class RegionsSection(_Section):
    comm_deg: Tuple[float, float] = (30.0, 50.0)
    sensing_deg: Tuple[float, float] = (-20.0, 20.0)

    @field_validator("comm_deg", "sensing_deg")
    @classmethod
    def _regions(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        return _check_region(value)

    @model_validator(mode="after")
    def _disjoint(self) -> "RegionsSection":
        a, b = self.comm_deg, self.sensing_deg
        if a[0] < b[1] and b[0] < a[1]:
            raise ValueError(f"communication {a} and sensing {b} regions overlap")
        return self


class ChannelSection(_Section):
    fading_power: float = Field(1.0, gt=0)
    reflection_power: float = Field(1.0, gt=0)
    target_prior: float = Field(0.5, gt=0, lt=1)
    per_symbol_angle: bool = True


class TrainingSection(_Section):
    profile: str = "desk"
    w_s: float = Field(0.5, ge=0, le=1)
    beam_mode: str = "network"
    angle_loss: str = "normalized"
    lr: Optional[float] = Field(None, gt=0)
    n_win_range: Tuple[int, int] = (1, 15)
    sense_snr_db_range: Tuple[float, float] = (-10.0, 10.0)
    comm_snr_db_range: Tuple[float, float] = (0.0, 25.0)
    pretrain_symbols: Optional[int] = Field(None, ge=1)
    finetune_symbols: Optional[int] = Field(None, ge=1)
    batch: Optional[int] = Field(None, ge=1)
    calibration_symbols: Optional[int] = Field(None, ge=1)

    @field_validator("sense_snr_db_range", "comm_snr_db_range")
    @classmethod
    def _ranges(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        return _check_range(value)

    @field_validator("profile")
    @classmethod
    def _profile(cls, value: str) -> str:
        if value not in PROFILES:
            raise ValueError(f"unknown profile '{value}'; choose one of {sorted(PROFILES)}")
        return value

    @field_validator("beam_mode")
    @classmethod
    def _beam_mode(cls, value: str) -> str:
        if value not in ("network", "direct"):
            raise ValueError("beam_mode must be 'network' or 'direct'")
        return value

    @field_validator("angle_loss")
    @classmethod
    def _angle_loss(cls, value: str) -> str:
        AngleLoss(value)
        return value

    @field_validator("n_win_range")
    @classmethod
    def _n_win(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        if not 1 <= value[0] <= value[1]:
            raise ValueError(f"n_win_range {value} must satisfy 1 <= min <= max")
        return value


class EvaluationSection(_Section):
    p_f: float = Field(1e-2, gt=0, lt=1)
    comm_snr_db: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0])
    sense_snr_db: List[float] = Field(default_factory=lambda: [-10.0, -5.0, 0.0, 5.0, 10.0])
    n_win: List[int] = Field(default_factory=lambda: [1, 2, 4, 8, 15])
    w_s_grid: List[float] = Field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    comm_symbols: int = Field(100_000, ge=1)
    sense_scenes: int = Field(2000, ge=1)
    pattern_grid: int = Field(721, ge=3)
    include_legacy: bool = False

    @field_validator("comm_snr_db", "sense_snr_db", "n_win", "w_s_grid")
    @classmethod
    def _non_empty(cls, value: List[Any]) -> List[Any]:
        if not value:
            raise ValueError("grids must not be empty")
        return value

    @field_validator("n_win")
    @classmethod
    def _positive_windows(cls, value: List[int]) -> List[int]:
        if min(value) < 1:
            raise ValueError("window lengths must be at least 1")
        return value

    @field_validator("w_s_grid")
    @classmethod
    def _weights(cls, value: List[float]) -> List[float]:
        if not all(0.0 <= w <= 1.0 for w in value):
            raise ValueError("trade-off weights must lie in [0, 1]")
        return value


class OutputSection(_Section):
    dir: str = "runs/default"


class ExperimentConfig(_Section):
    """Resolved experiment configuration."""
    array: ArraySection = Field(default_factory=ArraySection)
    regions: RegionsSection = Field(default_factory=RegionsSection)
    channel: ChannelSection = Field(default_factory=ChannelSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    output: OutputSection = Field(default_factory=OutputSection)
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def _windows_within_training(self) -> "ExperimentConfig":
        lo, hi = self.training.n_win_range
        outside = [n for n in self.evaluation.n_win if not lo <= n <= hi]
        if outside:
            raise ValueError(f"evaluation n_win {outside} outside training range {self.training.n_win_range}")
        return self

    def with_overrides(self, **sections: Dict[str, Any]) -> "ExperimentConfig":
        """Copy with selected section fields replaced (validated again)."""
        data = self.model_dump()
        for name, values in sections.items():
            if isinstance(values, dict):
                data[name].update(values)
            else:
                data[name] = values
        return from_dict(data)

    def system_config(self, angle_loss: Optional[AngleLoss] = None) -> SystemConfig:
        return SystemConfig(
            antennas=self.array.antennas,
            order=self.array.order,
            comm_region=AngleRegion.from_degrees(*self.regions.comm_deg),
            sensing_region=AngleRegion.from_degrees(*self.regions.sensing_deg),
            fading_power=self.channel.fading_power,
            reflection_power=self.channel.reflection_power,
            target_prior=self.channel.target_prior,
            per_symbol_angle=self.channel.per_symbol_angle,
            beam_mode=self.training.beam_mode,
            angle_loss=angle_loss or AngleLoss(self.training.angle_loss),
            p_f=self.evaluation.p_f,
        )

    def schedule(self, profile: Optional[str] = None) -> TrainSchedule:
        """Profile budgets with the ranges and explicit overrides of the training section."""
        t = self.training
        overrides: Dict[str, Any] = {
            "n_win_range": tuple(t.n_win_range),
            "sense_snr_db_range": tuple(t.sense_snr_db_range),
            "comm_snr_db_range": tuple(t.comm_snr_db_range),
        }
        for name in ("lr", "pretrain_symbols", "finetune_symbols", "batch", "calibration_symbols"):
            value = getattr(t, name)
            if value is not None:
                overrides[name] = value
        return schedule_for(profile or t.profile, **overrides)

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _describe(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(p) for p in error["loc"]) or "<root>"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def from_dict(data: Optional[Dict[str, Any]]) -> ExperimentConfig:
    """
    Validate a configuration mapping.

    Raises:
        ConfigurationError: unknown keys or invalid values
    """
    try:
        return ExperimentConfig.model_validate(data or {})
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid configuration: {_describe(exc)}") from exc


def load_config(path: Optional[Union[str, Path]] = None) -> ExperimentConfig:
    """
    Load a YAML configuration; no path gives the built-in defaults.

    Raises:
        ConfigurationError: missing file, malformed YAML or invalid values
    """
    if path is None:
        return ExperimentConfig()
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"Configuration file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: malformed YAML ({exc})") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigurationError(f"{path}: top level must be a mapping")
    config = from_dict(data)
    logger.info(f"Loaded configuration {path} (hash {config.config_hash()[:12]})")
    return config


__all__ = [
    "ArraySection",
    "RegionsSection",
    "ChannelSection",
    "TrainingSection",
    "EvaluationSection",
    "OutputSection",
    "ExperimentConfig",
    "from_dict",
    "load_config",
]
