"""Plain sum of task losses"""
import torch

from ..losses import TASKS, TaskLosses
from .base import BaseAggregation, active_losses


class UnbalancedAggregation(BaseAggregation):
    """L = sum_i L_i"""

    @property
    def name(self) -> str:
        return "unbalanced"

    @property
    def description(self) -> str:
        return "Sum of task losses"

    def aggregate(self, losses: TaskLosses) -> torch.Tensor:
        _, values = active_losses(losses)
        return values.sum()

    def weights(self) -> dict[str, float]:
        return dict.fromkeys(TASKS, 1.0)
