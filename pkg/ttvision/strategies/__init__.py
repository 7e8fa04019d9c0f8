"""Strategies package - loss aggregation for multi-task training"""
from .adaptive import AdaptiveAggregation
from .base import BaseAggregation, active_losses
from .manual import ManualAggregation
from .registry import StrategyRegistry, aggregate_strategies, build_strategy, strategy_registry
from .unbalanced import UnbalancedAggregation

__all__ = [
    'AdaptiveAggregation',
    'BaseAggregation',
    'ManualAggregation',
    'StrategyRegistry',
    'UnbalancedAggregation',
    'active_losses',
    'aggregate_strategies',
    'build_strategy',
    'strategy_registry',
]
