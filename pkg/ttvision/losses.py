"""Task losses and homoscedastic-uncertainty aggregation.

All cross-entropies are full binary cross-entropies ``-[t log p + (1 - t) log(1 - p)]``
with log arguments clamped at ``LOG_EPS``. Every function accepts a leading batch
dimension and averages over it.
"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

LOG_EPS = 1e-12
DICE_EPS = 1e-4
TASKS: tuple[str, ...] = ("ball_global", "ball_local", "event", "segmentation")


@dataclass
class TaskLosses:
    """The four task losses; a task without labels in the batch is None"""
    ball_global: torch.Tensor | None = None
    ball_local: torch.Tensor | None = None
    event: torch.Tensor | None = None
    segmentation: torch.Tensor | None = None

    def items(self) -> list[tuple[str, torch.Tensor | None]]:
        return [(task, getattr(self, task)) for task in TASKS]

    def as_floats(self) -> dict[str, float]:
        return {task: float(value.detach()) for task, value in self.items() if value is not None}

    def is_finite(self) -> bool:
        return all(bool(torch.isfinite(value).all()) for _, value in self.items() if value is not None)


@dataclass(frozen=True)
class EventClassWeights:
    bounce: float = 1.0
    net: float = 3.0

    def __post_init__(self) -> None:
        if self.bounce <= 0 or self.net <= 0:
            raise ValueError(f"event class weights must be positive, got {self.bounce}, {self.net}")

    def as_tensor(self, like: torch.Tensor) -> torch.Tensor:
        return torch.tensor([self.bounce, self.net], dtype=like.dtype, device=like.device)


def binary_cross_entropy(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Element-wise BCE with clamped logs"""
    return -(target * torch.log(pred.clamp_min(LOG_EPS))
             + (1 - target) * torch.log((1 - pred).clamp_min(LOG_EPS)))


def _check_same_shape(pred: torch.Tensor, target: torch.Tensor, what: str) -> None:
    if pred.shape != target.shape:
        raise ValueError(f"{what} shape mismatch: prediction {tuple(pred.shape)} vs target {tuple(target.shape)}")


def ball_loss(
    pred_x: torch.Tensor,
    pred_y: torch.Tensor,
    target_x: torch.Tensor,
    target_y: torch.Tensor,
) -> torch.Tensor:
    """Mean BCE over the x vector plus mean BCE over the y vector"""
    _check_same_shape(pred_x, target_x, "ball x")
    _check_same_shape(pred_y, target_y, "ball y")
    loss_x = binary_cross_entropy(pred_x, target_x).mean(dim=-1)
    loss_y = binary_cross_entropy(pred_y, target_y).mean(dim=-1)
    return (loss_x + loss_y).mean()


def event_loss(
    pred: torch.Tensor,
    target: torch.Tensor,
    weights: EventClassWeights | None = None,
) -> torch.Tensor:
    """Class-weighted BCE averaged over the two event types"""
    _check_same_shape(pred, target, "event")
    weights = weights or EventClassWeights()
    per_class = binary_cross_entropy(pred, target) * weights.as_tensor(pred)
    return per_class.mean(dim=-1).mean()


def dice_smooth(pred: torch.Tensor, target: torch.Tensor, eps: float = DICE_EPS) -> torch.Tensor:
    """Smoothed Dice coefficient over the trailing two (spatial) dimensions"""
    _check_same_shape(pred, target, "segmentation map")
    intersection = (pred * target).sum(dim=(-2, -1))
    return (2 * intersection + eps) / (pred.sum(dim=(-2, -1)) + target.sum(dim=(-2, -1)) + eps)


def segmentation_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean over classes (and batch) of (1 - Dice) + mean pixel BCE; maps are (..., 3, H, W)"""
    _check_same_shape(pred, target, "segmentation")
    dice_term = 1 - dice_smooth(pred, target)
    bce_term = binary_cross_entropy(pred, target).mean(dim=(-2, -1))
    return (dice_term + bce_term).mean()


def multitask_loss(losses: torch.Tensor, log_variances: torch.Tensor) -> torch.Tensor:
    """sum_i L_i / sigma_i^2 + log sigma_i with s_i = log sigma_i^2"""
    if losses.shape != log_variances.shape:
        raise ValueError(f"{losses.shape[0]} losses but {log_variances.shape[0]} uncertainty parameters")
    return (losses * torch.exp(-log_variances) + log_variances / 2).sum()


class UncertaintyParams(nn.Module):
    """Trainable s_i = log sigma_i^2, one per task, initialised to 0"""

    def __init__(self, tasks: tuple[str, ...] = TASKS):
        super().__init__()
        self.tasks = tasks
        self.log_variances = nn.Parameter(torch.zeros(len(tasks)))

    def select(self, tasks: list[str]) -> torch.Tensor:
        index = torch.tensor([self.tasks.index(t) for t in tasks], dtype=torch.long)
        return self.log_variances[index]

    def sigma_squared(self) -> dict[str, float]:
        values = torch.exp(self.log_variances.detach()).tolist()
        return dict(zip(self.tasks, values, strict=True))
