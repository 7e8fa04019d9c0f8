"""Fixed, manually chosen task weights"""
from collections.abc import Sequence

import torch

from ..losses import TASKS, TaskLosses
from .base import BaseAggregation, active_losses


class ManualAggregation(BaseAggregation):
    """L = sum_i w_i L_i with constant positive w_i"""

    def __init__(self, weights: Sequence[float] = (1.0, 1.0, 1.0, 1.0)):
        if len(weights) != len(TASKS):
            raise ValueError(f"expected {len(TASKS)} manual weights, got {len(weights)}")
        if any(w <= 0 for w in weights):
            raise ValueError(f"manual weights must be positive, got {list(weights)}")
        self._weights = dict(zip(TASKS, (float(w) for w in weights), strict=True))

    @property
    def name(self) -> str:
        return "manual"

    @property
    def description(self) -> str:
        return "Weighted sum of task losses with constant weights"

    def aggregate(self, losses: TaskLosses) -> torch.Tensor:
        names, values = active_losses(losses)
        w = torch.tensor([self._weights[n] for n in names], dtype=values.dtype, device=values.device)
        return (w * values).sum()

    def weights(self) -> dict[str, float]:
        return dict(self._weights)
