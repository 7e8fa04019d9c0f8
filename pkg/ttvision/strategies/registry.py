"""Aggregation strategy registry"""
from collections.abc import Callable, Sequence
from typing import Any

import torch

from ..losses import TaskLosses
from .adaptive import AdaptiveAggregation
from .base import BaseAggregation
from .manual import ManualAggregation
from .unbalanced import UnbalancedAggregation


class StrategyRegistry:
    """Maps strategy names to factories"""

    def __init__(self):
        self.factories: dict[str, Callable[..., BaseAggregation]] = {}
        self._register_default_strategies()

    def _register_default_strategies(self) -> None:
        """Register all default strategies"""
        self.register("unbalanced", lambda **_: UnbalancedAggregation())
        self.register("manual", lambda manual_weights=(1.0, 1.0, 1.0, 1.0), **_: ManualAggregation(manual_weights))
        self.register("adaptive", lambda **_: AdaptiveAggregation())

    def register(self, name: str, factory: Callable[..., BaseAggregation]) -> None:
        """Register a new strategy factory"""
        self.factories[name] = factory

    def names(self) -> list[str]:
        return sorted(self.factories)

    def create(self, name: str, **options: Any) -> BaseAggregation:
        """Instantiate a registered strategy"""
        if name not in self.factories:
            raise ValueError(f"Strategy '{name}' not found; available: {', '.join(self.names())}")
        return self.factories[name](**options)


# Global strategy registry instance
strategy_registry = StrategyRegistry()


def build_strategy(name: str, manual_weights: Sequence[float] | None = None) -> BaseAggregation:
    options: dict[str, Any] = {}
    if manual_weights is not None:
        options["manual_weights"] = tuple(manual_weights)
    return strategy_registry.create(name, **options)


def aggregate_strategies(losses: TaskLosses, strategy: BaseAggregation) -> torch.Tensor:
    """Aggregate with any strategy instance"""
    return strategy.aggregate(losses)
