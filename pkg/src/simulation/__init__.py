"""
System orchestration.

Components:
    - JcasSystem: transmitter, channels and receivers as one differentiable pipeline
    - TrainSchedule / Scheduler: phase budgets and progress tracking
"""

from .kernel import COMPONENT_ORDER, ForwardResult, JcasSystem, SystemConfig, TrainingBatch
from .scheduler import PROFILES, Phase, Scheduler, TrainSchedule, schedule_for

__all__ = [
    "COMPONENT_ORDER",
    "ForwardResult",
    "JcasSystem",
    "SystemConfig",
    "TrainingBatch",
    "PROFILES",
    "Phase",
    "Scheduler",
    "TrainSchedule",
    "schedule_for",
]
