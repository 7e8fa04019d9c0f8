"""Tests for loss aggregation strategies"""
import math

import pytest
import torch

from ttvision.losses import TaskLosses
from ttvision.strategies import (
    AdaptiveAggregation,
    ManualAggregation,
    UnbalancedAggregation,
    aggregate_strategies,
    build_strategy,
    strategy_registry,
)


def _losses(*values, dtype=torch.float32):
    return TaskLosses(*(torch.tensor(v, dtype=dtype) for v in values))


class TestStrategies:

    def test_unbalanced_sum(self):
        assert aggregate_strategies(_losses(1.0, 1.0, 1.0, 1.0), UnbalancedAggregation()).item() == 4.0

    def test_manual_ones_equals_unbalanced(self):
        losses = _losses(0.3, 1.7, 0.2, 0.9)
        manual = ManualAggregation((1, 1, 1, 1)).aggregate(losses)
        assert manual.item() == UnbalancedAggregation().aggregate(losses).item()

    def test_manual_weights(self):
        losses = _losses(1.0, 1.0, 2.0, 0.5)
        assert ManualAggregation((1, 2, 3, 4)).aggregate(losses).item() == pytest.approx(11.0)

    def test_adaptive_initial_equals_unbalanced(self):
        losses = _losses(0.3, 1.7, 0.2, 0.9)
        adaptive = AdaptiveAggregation().aggregate(losses)
        assert adaptive.item() == UnbalancedAggregation().aggregate(losses).item()

    def test_missing_task_is_skipped(self):
        losses = TaskLosses(ball_global=torch.tensor(0.5), event=torch.tensor(1.5))
        assert UnbalancedAggregation().aggregate(losses).item() == 2.0
        assert AdaptiveAggregation().aggregate(losses).item() == 2.0

    def test_no_losses_rejected(self):
        with pytest.raises(ValueError):
            UnbalancedAggregation().aggregate(TaskLosses())

    @pytest.mark.parametrize("weights", [(1, 1, 1), (1, 0, 1, 1), (1, -1, 1, 1)])
    def test_manual_invalid_weights(self, weights):
        with pytest.raises(ValueError):
            ManualAggregation(weights)

    def test_adaptive_weights_report(self):
        strategy = AdaptiveAggregation()
        with torch.no_grad():
            strategy.uncertainty.log_variances.copy_(torch.tensor([0.0, math.log(2), 0.0, 0.0]))
        assert strategy.weights()["ball_local"] == pytest.approx(0.5)
        assert strategy.to_dict()["name"] == "adaptive"

    def test_adaptive_state_round_trip(self):
        strategy = AdaptiveAggregation()
        with torch.no_grad():
            strategy.uncertainty.log_variances.fill_(0.25)
        restored = AdaptiveAggregation()
        restored.load_state_dict(strategy.state_dict())
        assert torch.equal(restored.uncertainty.log_variances, strategy.uncertainty.log_variances)


class TestAdaptiveStationarity:

    def test_converges_to_twice_the_loss(self):
        targets = (0.1, 1.0, 10.0, 1.0)
        strategy = AdaptiveAggregation()
        optimizer = torch.optim.SGD(strategy.parameters(), lr=0.1)
        losses = _losses(*targets)
        for _ in range(3000):
            optimizer.zero_grad()
            strategy.aggregate(losses).backward()
            optimizer.step()
        sigma_squared = strategy.uncertainty.sigma_squared()
        for task, loss_value in zip(("ball_global", "ball_local", "event", "segmentation"), targets, strict=True):
            assert sigma_squared[task] == pytest.approx(2 * loss_value, rel=0.01)

    def test_only_adaptive_has_parameters(self):
        assert UnbalancedAggregation().parameters() == []
        assert ManualAggregation().parameters() == []
        assert len(AdaptiveAggregation().parameters()) == 1


class TestRegistry:

    def test_default_names(self):
        assert strategy_registry.names() == ["adaptive", "manual", "unbalanced"]

    def test_build_manual_with_weights(self):
        strategy = build_strategy("manual", [1, 2, 3, 4])
        assert strategy.weights() == {"ball_global": 1.0, "ball_local": 2.0, "event": 3.0, "segmentation": 4.0}

    def test_unknown_strategy(self):
        with pytest.raises(ValueError, match="not found"):
            build_strategy("gradnorm")
