"""Homoscedastic-uncertainty weighting with trainable log-variances"""
import math
from typing import Any

import torch
from torch import nn

from ..losses import TaskLosses, UncertaintyParams, multitask_loss
from .base import BaseAggregation, active_losses


class AdaptiveAggregation(BaseAggregation):
    """L = sum_i L_i exp(-s_i) + s_i / 2"""

    def __init__(self, uncertainty: UncertaintyParams | None = None):
        self.uncertainty = uncertainty or UncertaintyParams()

    @property
    def name(self) -> str:
        return "adaptive"

    @property
    def description(self) -> str:
        return "Task losses weighted by trainable homoscedastic uncertainty"

    def aggregate(self, losses: TaskLosses) -> torch.Tensor:
        names, values = active_losses(losses)
        log_variances = self.uncertainty.select(names).to(device=values.device, dtype=values.dtype)
        return multitask_loss(values, log_variances)

    def weights(self) -> dict[str, float]:
        return {task: 1.0 / s2 if s2 > 0 else math.inf for task, s2 in self.uncertainty.sigma_squared().items()}

    def parameters(self) -> list[nn.Parameter]:
        return list(self.uncertainty.parameters())

    def to(self, device: torch.device | str) -> "AdaptiveAggregation":
        self.uncertainty.to(device)
        return self

    def state_dict(self) -> dict[str, Any]:
        return self.uncertainty.state_dict()

    def load_state_dict(self, state: dict[str, Any]) -> None:
        self.uncertainty.load_state_dict(state)
