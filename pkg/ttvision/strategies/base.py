"""Base class for loss aggregation strategies"""
from abc import ABC, abstractmethod
from typing import Any

import torch
from torch import nn

from ..losses import TaskLosses


def active_losses(losses: TaskLosses) -> tuple[list[str], torch.Tensor]:
    """Names and stacked values of the tasks that carry a loss in this batch"""
    present = [(task, value) for task, value in losses.items() if value is not None]
    if not present:
        raise ValueError("no task produced a loss")
    names = [task for task, _ in present]
    return names, torch.stack([value.reshape(()) for _, value in present])


class BaseAggregation(ABC):
    """Abstract base class for all aggregation strategies"""

    @property
    @abstractmethod
    def name(self) -> str:
        """Strategy name"""
        pass

    @property
    def description(self) -> str:
        """Strategy description"""
        return ""

    @abstractmethod
    def aggregate(self, losses: TaskLosses) -> torch.Tensor:
        """Combine the task losses into one scalar"""
        pass

    @abstractmethod
    def weights(self) -> dict[str, float]:
        """Effective multiplier currently applied to each task loss"""
        pass

    def parameters(self) -> list[nn.Parameter]:
        """Trainable parameters optimised jointly with the model"""
        return []

    def to(self, device: torch.device | str) -> "BaseAggregation":
        return self

    def state_dict(self) -> dict[str, Any]:
        return {}

    def load_state_dict(self, state: dict[str, Any]) -> None:
        pass

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "description": self.description,
            "weights": self.weights(),
        }
