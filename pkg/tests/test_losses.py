"""Tests for the task losses and the uncertainty-weighted aggregate"""
import math

import pytest
import torch
from torch.autograd import gradcheck

from ttvision.losses import (
    DICE_EPS,
    EventClassWeights,
    TaskLosses,
    UncertaintyParams,
    ball_loss,
    binary_cross_entropy,
    dice_smooth,
    event_loss,
    multitask_loss,
    segmentation_loss,
)

LN2 = math.log(2)


class TestBallLoss:

    def test_exact_binary_match_is_zero(self):
        target = torch.zeros(1, 320)
        target[0, 10] = 1.0
        assert ball_loss(target, torch.zeros(1, 128), target, torch.zeros(1, 128)).item() == pytest.approx(0, abs=1e-9)

    def test_one_entry_off(self):
        pred_x = torch.zeros(1, 320, dtype=torch.float64)
        target_x = torch.zeros(1, 320, dtype=torch.float64)
        pred_x[0, 7], target_x[0, 7] = 0.5, 1.0
        zeros_y = torch.zeros(1, 128, dtype=torch.float64)
        loss = ball_loss(pred_x, zeros_y, target_x, zeros_y)
        assert loss.item() == pytest.approx(LN2 / 320, rel=1e-9)

    def test_uniform_half_against_zero(self):
        loss = ball_loss(torch.full((1, 320), 0.5), torch.full((1, 128), 0.5),
                         torch.zeros(1, 320), torch.zeros(1, 128))
        assert loss.item() == pytest.approx(2 * LN2, rel=1e-6)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ball_loss(torch.zeros(1, 320), torch.zeros(1, 128), torch.zeros(1, 319), torch.zeros(1, 128))

    def test_log_clamp_keeps_finite(self):
        loss = binary_cross_entropy(torch.tensor([0.0, 1.0]), torch.tensor([1.0, 0.0]))
        assert torch.isfinite(loss).all()
        assert loss[0].item() == pytest.approx(-math.log(1e-12))


class TestEventLoss:

    def test_half_against_zero(self):
        loss = event_loss(torch.tensor([[0.5, 0.5]]), torch.tensor([[0.0, 0.0]]))
        assert loss.item() == pytest.approx(2 * LN2, rel=1e-6)

    def test_vanishes_near_target(self):
        eps = 1e-9
        loss = event_loss(torch.tensor([[1 - eps, eps]], dtype=torch.float64), torch.tensor([[1.0, 0.0]], dtype=torch.float64))
        assert loss.item() < 1e-8

    def test_net_errors_weigh_three_times(self):
        target = torch.tensor([[0.0, 0.0]])
        bounce_wrong = event_loss(torch.tensor([[0.7, 0.0]]), target)
        net_wrong = event_loss(torch.tensor([[0.0, 0.7]]), target)
        assert net_wrong.item() == pytest.approx(3 * bounce_wrong.item(), rel=1e-5)

    def test_linear_in_weights(self):
        pred = torch.tensor([[0.3, 0.8]], dtype=torch.float64)
        target = torch.tensor([[0.7, 0.2]], dtype=torch.float64)
        one = event_loss(pred, target, EventClassWeights(1.0, 1.0))
        doubled = event_loss(pred, target, EventClassWeights(2.0, 2.0))
        assert doubled.item() == pytest.approx(2 * one.item(), rel=1e-12)

    def test_weights_must_be_positive(self):
        with pytest.raises(ValueError):
            EventClassWeights(0.0, 3.0)


class TestDice:

    def test_identical(self):
        mask = torch.zeros(8, 8)
        mask[2:5, 2:5] = 1
        assert dice_smooth(mask, mask).item() == pytest.approx(1.0)

    def test_both_empty(self):
        assert dice_smooth(torch.zeros(4, 4), torch.zeros(4, 4)).item() == pytest.approx(1.0)

    def test_disjoint(self):
        a = torch.zeros(10, 10, dtype=torch.float64)
        b = torch.zeros(10, 10, dtype=torch.float64)
        a[0, :] = 1
        b[9, :] = 1
        assert dice_smooth(a, b).item() == pytest.approx(DICE_EPS / (20 + DICE_EPS), rel=1e-9)

    def test_symmetric_for_binary(self):
        torch.manual_seed(0)
        a = (torch.rand(16, 16) > 0.5).float()
        b = (torch.rand(16, 16) > 0.3).float()
        assert dice_smooth(a, b).item() == dice_smooth(b, a).item()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            dice_smooth(torch.zeros(4, 4), torch.zeros(4, 5))


class TestSegmentationLoss:

    def test_exact_match_near_zero(self):
        target = torch.zeros(3, 8, 8)
        target[1, :4] = 1
        assert segmentation_loss(target, target).item() == pytest.approx(0, abs=1e-6)

    def test_uniform_half_against_empty(self):
        n = 8 * 8
        loss = segmentation_loss(torch.full((3, 8, 8), 0.5, dtype=torch.float64), torch.zeros(3, 8, 8, dtype=torch.float64))
        expected = (1 - DICE_EPS / (n / 2 + DICE_EPS)) + LN2
        assert loss.item() == pytest.approx(expected, rel=1e-9)

    def test_positive_inside_open_interval(self):
        torch.manual_seed(0)
        pred = torch.rand(2, 3, 8, 8) * 0.98 + 0.01
        target = (torch.rand(2, 3, 8, 8) > 0.5).float()
        assert segmentation_loss(pred, target).item() > 0


class TestMultitaskLoss:

    def test_zero_log_variance_is_plain_sum(self):
        losses = torch.tensor([0.5, 1.0, 2.0, 0.25])
        assert multitask_loss(losses, torch.zeros(4)).item() == pytest.approx(3.75)

    def test_single_term(self):
        assert multitask_loss(torch.tensor([0.5]), torch.zeros(1)).item() == pytest.approx(0.5)

    def test_permutation_invariant(self):
        losses = torch.tensor([0.5, 1.0, 2.0, 0.25], dtype=torch.float64)
        s = torch.tensor([0.1, -0.3, 0.7, 0.0], dtype=torch.float64)
        perm = torch.tensor([2, 0, 3, 1])
        assert multitask_loss(losses, s).item() == pytest.approx(multitask_loss(losses[perm], s[perm]).item(), rel=1e-12)

    def test_stationary_point(self):
        for loss_value in (0.1, 1.0, 10.0):
            s = torch.tensor([math.log(2 * loss_value)], dtype=torch.float64, requires_grad=True)
            multitask_loss(torch.tensor([loss_value], dtype=torch.float64), s).backward()
            assert abs(s.grad.item()) < 1e-12

    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            multitask_loss(torch.ones(3), torch.zeros(4))

    def test_uncertainty_params_start_at_one(self):
        params = UncertaintyParams()
        assert params.sigma_squared() == {"ball_global": 1.0, "ball_local": 1.0, "event": 1.0, "segmentation": 1.0}

    def test_task_losses_skip_missing(self):
        losses = TaskLosses(event=torch.tensor(0.5))
        assert losses.as_floats() == {"event": 0.5}
        assert losses.is_finite()
        assert not TaskLosses(event=torch.tensor(float("nan"))).is_finite()


class TestGradients:

    @pytest.mark.parametrize("seed", range(100))
    def test_ball_loss(self, seed):
        g = torch.Generator().manual_seed(seed)
        px = (torch.rand(2, 6, generator=g, dtype=torch.float64) * 0.9 + 0.05).requires_grad_()
        py = (torch.rand(2, 4, generator=g, dtype=torch.float64) * 0.9 + 0.05).requires_grad_()
        tx = torch.rand(2, 6, generator=g, dtype=torch.float64)
        ty = torch.rand(2, 4, generator=g, dtype=torch.float64)
        assert gradcheck(lambda a, b: ball_loss(a, b, tx, ty), (px, py), eps=1e-5, atol=1e-8, rtol=1e-4)

    @pytest.mark.parametrize("seed", range(100))
    def test_event_loss(self, seed):
        g = torch.Generator().manual_seed(seed)
        pred = (torch.rand(3, 2, generator=g, dtype=torch.float64) * 0.9 + 0.05).requires_grad_()
        target = torch.rand(3, 2, generator=g, dtype=torch.float64)
        assert gradcheck(lambda p: event_loss(p, target), (pred,), eps=1e-5, atol=1e-8, rtol=1e-4)

    @pytest.mark.parametrize("seed", range(100))
    def test_segmentation_loss(self, seed):
        g = torch.Generator().manual_seed(seed)
        pred = (torch.rand(1, 3, 4, 5, generator=g, dtype=torch.float64) * 0.9 + 0.05).requires_grad_()
        target = (torch.rand(1, 3, 4, 5, generator=g, dtype=torch.float64) > 0.5).double()
        assert gradcheck(lambda p: segmentation_loss(p, target), (pred,), eps=1e-5, atol=1e-8, rtol=1e-4)

    @pytest.mark.parametrize("seed", range(100))
    def test_multitask_loss(self, seed):
        g = torch.Generator().manual_seed(seed)
        losses = (torch.rand(4, generator=g, dtype=torch.float64) * 3).requires_grad_()
        s = (torch.randn(4, generator=g, dtype=torch.float64)).requires_grad_()
        assert gradcheck(multitask_loss, (losses, s), eps=1e-5, atol=1e-8, rtol=1e-4)
