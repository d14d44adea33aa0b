"""
Training losses.

    L = (1 - w_s) L_comm + w_s L_detect + w_s L_angle

L_comm is the mean bit-wise binary cross-entropy of the decoder LLRs
(positive LLR favours bit 0, so P(b = 1) = sigmoid(-L)). L_detect is the
mean BCE of the detection probabilities. The angle term is either the plain
mean squared error over target-present scenes, or the normalized error

    (1 / N_T) sum_i (N_win,i / sigma_ns,i^2) (theta_i - theta_hat_i)^2

whose weights undo the 1 / (N_win SNR) scaling of the achievable error so
that every (N_win, sigma_ns) operating point contributes a term of similar
magnitude. Angle terms only average over scenes with T = 1; a batch
without targets contributes 0 and reports an empty count.

Every ``*_grad`` variant returns (value, dvalue/dinput).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from ..core.errors import ConfigurationError, ContractError, DomainError

PROB_CLAMP = 1e-12


class AngleLoss(Enum):
    NORMALIZED = "normalized"
    LEGACY = "legacy"


@dataclass(frozen=True)
class TradeoffConfig:
    """Sensing weight w_s in [0, 1]."""
    w_s: float

    def __post_init__(self):
        if not 0.0 <= self.w_s <= 1.0:
            raise ConfigurationError(f"Trade-off weight w_s must lie in [0, 1], got {self.w_s}")


@dataclass(frozen=True)
class MaskedLoss:
    """
    Loss averaged over a subset of the batch.

    Attributes:
        value: mean over the counted scenes (0 when none)
        count: number of scenes that contributed
    """
    value: float
    count: int

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class LossBreakdown:
    """
    Attributes:
        comm, detect, angle: individual terms (0 for a switched-off term)
        total: (1 - w_s) comm + w_s detect + w_s angle
        w_s: trade-off weight used
    """
    comm: float
    detect: float
    angle: float
    total: float
    w_s: float

    def to_dict(self) -> dict:
        return {
            "comm": self.comm,
            "detect": self.detect,
            "angle": self.angle,
            "total": self.total,
            "w_s": self.w_s,
        }


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ContractError(f"Shape mismatch: {a.shape} vs {b.shape}")


def loss_comm_grad(llrs: np.ndarray, bits: np.ndarray) -> Tuple[float, np.ndarray]:
    llrs = np.asarray(llrs, dtype=np.float64)
    bits = np.asarray(bits)
    _check_shapes(llrs, bits)
    sign = 1.0 - 2.0 * bits
    margin = sign * llrs
    value = float(np.mean(np.logaddexp(0.0, -margin)))
    grad = -sign * expit(-margin) / llrs.size
    return value, grad


def loss_comm(llrs: np.ndarray, bits: np.ndarray) -> float:
    """Mean BCE (nats) of bits against sigmoid-of-LLR probabilities."""
    return loss_comm_grad(llrs, bits)[0]


def loss_detect(p_target: np.ndarray, labels: np.ndarray) -> float:
    """Mean BCE of presence labels; probabilities clamped to [1e-12, 1 - 1e-12]."""
    p = np.clip(np.asarray(p_target, dtype=np.float64), PROB_CLAMP, 1.0 - PROB_CLAMP)
    t = np.asarray(labels, dtype=np.float64)
    _check_shapes(p, t)
    return float(np.mean(-(t * np.log(p) + (1.0 - t) * np.log1p(-p))))


def loss_detect_grad(logits: np.ndarray, offset, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Detection BCE from pre-sigmoid logits.

    Returns the loss and its gradient with respect to the logits
    ((p - T) / N, with p = sigmoid(logit + T_off)).
    """
    logits = np.asarray(logits, dtype=np.float64)
    p = expit(logits + offset)
    value = loss_detect(p, labels)
    return value, (p - np.asarray(labels, dtype=np.float64)) / logits.size


def _masked_sq_error(
    theta: np.ndarray,
    theta_hat: np.ndarray,
    present: np.ndarray,
    weights: np.ndarray
) -> Tuple[MaskedLoss, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    _check_shapes(theta, theta_hat)
    mask = np.asarray(present, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        return MaskedLoss(0.0, 0), np.zeros_like(theta_hat)
    err = theta_hat - theta
    value = float(np.sum(weights[mask] * err[mask] ** 2) / count)
    grad = np.where(mask, 2.0 * weights * err / count, 0.0)
    return MaskedLoss(value, count), grad


def normalization_weights(n_win: np.ndarray, noise_std: np.ndarray) -> np.ndarray:
    """N_win / sigma_ns^2 per scene."""
    noise_std = np.asarray(noise_std, dtype=np.float64)
    if np.any(noise_std <= 0):
        raise DomainError("Normalized angle loss needs sigma_ns > 0 for every scene")
    return np.asarray(n_win, dtype=np.float64) / noise_std ** 2


def loss_angle_legacy_grad(theta, theta_hat, present) -> Tuple[MaskedLoss, np.ndarray]:
    theta = np.asarray(theta, dtype=np.float64)
    return _masked_sq_error(theta, theta_hat, present, np.ones_like(theta))


def loss_angle_legacy(theta, theta_hat, present) -> MaskedLoss:
    """Mean squared angle error over target-present scenes."""
    return loss_angle_legacy_grad(theta, theta_hat, present)[0]


def loss_angle_normalized_grad(
    theta, theta_hat, n_win, noise_std, present
) -> Tuple[MaskedLoss, np.ndarray]:
    weights = normalization_weights(n_win, noise_std)
    return _masked_sq_error(theta, theta_hat, present, np.broadcast_to(weights, np.shape(theta)))


def loss_angle_normalized(theta, theta_hat, n_win, noise_std, present) -> MaskedLoss:
    """Mean over target-present scenes of (N_win / sigma_ns^2)(theta - theta_hat)^2."""
    return loss_angle_normalized_grad(theta, theta_hat, n_win, noise_std, present)[0]


def total_loss(
    comm: float,
    detect: float,
    angle: float,
    w_s: float,
    detect_on: bool = True,
    angle_on: bool = True
) -> LossBreakdown:
    """
    Weighted sum of the three terms.

    A switched-off term is reported as 0 so that the breakdown identity
    holds for every phase.
    """
    TradeoffConfig(w_s)
    detect = detect if detect_on else 0.0
    angle = angle if angle_on else 0.0
    total = (1.0 - w_s) * comm + w_s * detect + w_s * angle
    return LossBreakdown(comm=comm, detect=detect, angle=angle, total=total, w_s=w_s)


def angle_loss_grad(
    kind: AngleLoss,
    theta: np.ndarray,
    theta_hat: np.ndarray,
    present: np.ndarray,
    n_win: Optional[np.ndarray] = None,
    noise_std: Optional[np.ndarray] = None
) -> Tuple[MaskedLoss, np.ndarray]:
    if kind is AngleLoss.LEGACY:
        return loss_angle_legacy_grad(theta, theta_hat, present)
    return loss_angle_normalized_grad(theta, theta_hat, n_win, noise_std, present)


__all__ = [
    "AngleLoss",
    "TradeoffConfig",
    "MaskedLoss",
    "LossBreakdown",
    "loss_comm",
    "loss_comm_grad",
    "loss_detect",
    "loss_detect_grad",
    "loss_angle_legacy",
    "loss_angle_legacy_grad",
    "loss_angle_normalized",
    "loss_angle_normalized_grad",
    "normalization_weights",
    "angle_loss_grad",
    "total_loss",
]
