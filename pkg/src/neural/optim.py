"""
Adam optimizer over ``MlpParams`` blocks.

    m_t = beta1 m_{t-1} + (1 - beta1) g
    v_t = beta2 v_{t-1} + (1 - beta2) g^2
    w_t = w_{t-1} - lr * (m_t / (1 - beta1^t)) / (sqrt(v_t / (1 - beta2^t)) + eps)
"""

from dataclasses import dataclass, field, replace
from typing import List, Tuple

import numpy as np

from ..core.errors import ConfigurationError, ContractError, TrainingError
from .mlp import MlpParams

DEFAULT_LR = 1e-4


@dataclass
class AdamState:
    """
    Moment accumulators and hyperparameters for one parameter set.

    Attributes:
        m: first moments, one array per parameter block
        v: second moments, one array per parameter block
        step: number of updates applied
        lr: learning rate
        beta1, beta2: moment decay rates
        eps: denominator floor
    """
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    step: int = 0
    lr: float = DEFAULT_LR
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr < 0:
            raise ConfigurationError(f"Learning rate must be non-negative, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ConfigurationError(f"Adam decay rates must lie in [0, 1), got {self.beta1}, {self.beta2}")

    @staticmethod
    def for_params(params: MlpParams, lr: float = DEFAULT_LR, **kwargs) -> "AdamState":
        blocks = params.blocks()
        return AdamState(
            m=[np.zeros_like(b) for b in blocks],
            v=[np.zeros_like(b) for b in blocks],
            lr=lr,
            **kwargs,
        )

    def hyperparameters(self) -> dict:
        return {
            "step": self.step,
            "lr": self.lr,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "eps": self.eps,
        }


def adam_step(
    state: AdamState,
    params: MlpParams,
    grads: MlpParams,
    name: str = "params"
) -> Tuple[MlpParams, AdamState]:
    """
    Apply one Adam update.

    Returns:
        (updated params, updated state); the inputs are left untouched

    Raises:
        ContractError: gradient blocks do not match the parameter blocks
        TrainingError: a gradient block holds NaN or Inf
    """
    blocks = params.blocks()
    grad_blocks = grads.blocks()
    names = params.block_names()
    if len(grad_blocks) != len(blocks) or len(state.m) != len(blocks):
        raise ContractError(
            f"{name}: {len(blocks)} parameter blocks, {len(grad_blocks)} gradient blocks, "
            f"{len(state.m)} moment blocks"
        )
    for block_name, w, g in zip(names, blocks, grad_blocks):
        if w.shape != g.shape:
            raise ContractError(f"{name}.{block_name}: gradient shape {g.shape} != {w.shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"Non-finite gradient in {name}.{block_name}")

    step = state.step + 1
    correction1 = 1.0 - state.beta1 ** step
    correction2 = 1.0 - state.beta2 ** step
    new_m, new_v, new_blocks = [], [], []
    for w, g, m, v in zip(blocks, grad_blocks, state.m, state.v):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        update = state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        new_m.append(m)
        new_v.append(v)
        new_blocks.append(w - update)

    updated = MlpParams.from_blocks(new_blocks, direct=not params.weights)
    return updated, replace(state, m=new_m, v=new_v, step=step)


__all__ = ["AdamState", "adam_step", "DEFAULT_LR"]
