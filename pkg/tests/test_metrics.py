"""Tests for evaluation metrics and the streaming accumulator"""
import math
from dataclasses import replace

import numpy as np
import pytest

from ttvision.metrics import (
    BallCounts,
    BallEvalRecord,
    MetricAccumulator,
    ball_accuracy,
    ball_rmse,
    decide_presence,
    event_score,
    iou,
    mean_distance,
    merge_all,
    pce,
    predicted_center,
    spce,
)
from ttvision.models import EvaluationReport
from ttvision.targets import build_ball_target


def _peak(length, index, value=0.9):
    v = np.zeros(length)
    if index is not None:
        v[index] = value
    return v


def _record(pred, truth, scale="local"):
    vx = _peak(320, None if pred is None else pred[0])
    vy = _peak(128, None if pred is None else pred[1])
    return BallEvalRecord(vx=vx, vy=vy, truth=truth, scale=scale)


class TestPresenceAndCentre:

    @pytest.mark.parametrize("max_x,max_y,expected", [(0.9, 0.6, True), (0.9, 0.4, False), (0.0, 0.0, False), (0.5, 0.9, False)])
    def test_decide_presence(self, max_x, max_y, expected):
        assert decide_presence(np.array([0.1, max_x]), np.array([max_y, 0.2])) is expected

    def test_peak_decodes(self):
        assert predicted_center(_peak(320, 50), _peak(128, 80)) == (50, 80)

    def test_tie_goes_to_lower_index(self):
        assert predicted_center(np.full(320, 0.8), np.full(128, 0.8)) == (0, 0)

    def test_gaussian_decodes_to_centre(self):
        target = build_ball_target((211, 37), 320, 128, 1.25)
        assert predicted_center(target.vx, target.vy) == (211, 37)

    def test_absent_rejected(self):
        with pytest.raises(ValueError):
            predicted_center(np.zeros(320), np.zeros(128))


class TestBallMetrics:

    def test_accuracy_arithmetic(self):
        acc = MetricAccumulator()
        acc.ball["local"] = BallCounts(tp=97, tn=1, fp=1, fn=1)
        assert ball_accuracy(acc) == pytest.approx(0.98)

    def test_counts_from_records(self):
        acc = MetricAccumulator()
        acc.add_ball(_record((10, 10), (10.0, 10.0)))
        acc.add_ball(_record(None, None))
        acc.add_ball(_record((5, 5), None))
        acc.add_ball(_record(None, (3.0, 3.0)))
        counts = acc.ball["local"]
        assert (counts.tp, counts.tn, counts.fp, counts.fn) == (1, 1, 1, 1)
        assert ball_accuracy(acc) == 0.5

    def test_rmse_three_four_five(self):
        acc = MetricAccumulator()
        acc.add_ball(_record((13, 24), (10.0, 20.0)))
        assert ball_rmse(acc) == 5.0

    def test_rmse_two_detections(self):
        acc = MetricAccumulator()
        acc.add_ball(_record((10, 20), (10.0, 20.0)))
        acc.add_ball(_record((13, 24), (10.0, 20.0)))
        assert ball_rmse(acc) == pytest.approx(math.sqrt(12.5))
        assert mean_distance(acc) == pytest.approx(2.5)

    def test_rmse_ignores_misses(self):
        acc = MetricAccumulator()
        acc.add_ball(_record((13, 24), (10.0, 20.0)))
        acc.add_ball(_record((300, 100), None))
        acc.add_ball(_record(None, (50.0, 50.0)))
        assert ball_rmse(acc) == 5.0

    def test_scales_are_separate(self):
        acc = MetricAccumulator()
        acc.add_ball(_record((10, 10), (10.0, 10.0), scale="global"))
        assert acc.ball["local"].total == 0
        with pytest.raises(ValueError):
            ball_accuracy(acc, "local")

    def test_undefined_cases_rejected(self):
        acc = MetricAccumulator()
        with pytest.raises(ValueError):
            ball_accuracy(acc)
        acc.add_ball(_record(None, None))
        with pytest.raises(ValueError):
            ball_rmse(acc)


class TestEventMetrics:

    @pytest.mark.parametrize("pred,target,expected", [(0.6, 0.8, True), (0.6, 0.3, False), (0.4, 0.0, True)])
    def test_pce_examples(self, pred, target, expected):
        assert pce(np.array([pred, 0.0]), np.array([target, 0.0]))[0] is expected

    @pytest.mark.parametrize("pred,target,expected", [(0.6, 0.8, True), (0.6, 1.0, False), (0.37, 0.37, True)])
    def test_spce_examples(self, pred, target, expected):
        assert spce(np.array([pred, 0.0]), np.array([target, 0.0]))[0] is expected

    def test_spce_and_pce_disagree_on_intermediate_targets(self):
        # PCE right, SPCE wrong
        assert pce([0.55, 0.0], [1.0, 0.0]) == (True, True)
        assert spce([0.55, 0.0], [1.0, 0.0]) == (False, True)
        # SPCE right, PCE wrong
        assert pce([0.45, 0.0], [0.6, 0.0]) == (False, True)
        assert spce([0.45, 0.0], [0.6, 0.0]) == (True, True)

    def test_spce_implies_pce_on_binary_targets(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            pred = rng.random(2)
            target = rng.integers(0, 2, 2).astype(float)
            for ok_spce, ok_pce in zip(spce(pred, target), pce(pred, target), strict=True):
                assert not ok_spce or ok_pce

    def test_scores_per_type(self):
        acc = MetricAccumulator()
        acc.add_event(np.array([0.9, 0.1]), np.array([1.0, 0.0]))
        acc.add_event(np.array([0.2, 0.6]), np.array([1.0, 0.0]))
        assert event_score(acc, "pce") == 0.5
        assert event_score(acc, "pce", "bounce") == 0.5
        assert event_score(acc, "spce", "net") == 0.5

    def test_no_events_rejected(self):
        with pytest.raises(ValueError):
            event_score(MetricAccumulator())


class TestIoU:

    def test_identical(self):
        mask = np.zeros((20, 20))
        mask[3:9, 4:12] = 1
        assert iou(mask, mask) == 1.0

    def test_overlapping_squares(self):
        a = np.zeros((30, 30))
        b = np.zeros((30, 30))
        a[0:10, 0:10] = 1
        b[5:15, 0:10] = 1
        assert iou(a, b) == pytest.approx(1 / 3)

    def test_disjoint(self):
        a = np.zeros((10, 10))
        b = np.zeros((10, 10))
        a[0, 0], b[9, 9] = 1, 1
        assert iou(a, b) == 0.0

    def test_both_empty(self):
        assert iou(np.zeros((4, 4)), np.zeros((4, 4))) == 1.0

    def test_prediction_thresholded(self):
        target = np.zeros((4, 4))
        target[0] = 1
        pred = np.full((4, 4), 0.4)
        pred[0] = 0.51
        assert iou(pred, target) == 1.0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            iou(np.zeros((4, 4)), np.zeros((4, 5)))


def _random_stream(seed, n):
    rng = np.random.default_rng(seed)
    balls, events, segs = [], [], []
    for _ in range(n):
        scale = "global" if rng.random() < 0.5 else "local"
        vx = rng.random(32) * rng.choice([0.45, 1.0])
        vy = rng.random(16) * rng.choice([0.45, 1.0])
        truth = None if rng.random() < 0.3 else (float(rng.integers(0, 32)), float(rng.integers(0, 16)))
        balls.append(BallEvalRecord(vx=vx, vy=vy, truth=truth, scale=scale))
        events.append((rng.random(2), rng.choice([0.0, 0.38, 0.71, 0.92, 1.0], size=2)))
        segs.append((rng.random((3, 6, 6)), (rng.random((3, 6, 6)) > 0.6).astype(np.uint8)))
    return balls, events, segs


def _accumulate(balls, events, segs):
    acc = MetricAccumulator()
    for record in balls:
        acc.add_ball(record)
    for pred, target in events:
        acc.add_event(pred, target)
    for pred, target in segs:
        acc.add_segmentation(pred, target)
    return acc


def _brute_force(balls, events, segs):
    expected = {}
    for scale in ("global", "local"):
        records = [r for r in balls if r.scale == scale]
        correct, sq, dist = 0, [], []
        for r in records:
            present = r.vx.max() > 0.5 and r.vy.max() > 0.5
            correct += int(present == (r.truth is not None))
            if present and r.truth is not None:
                d2 = (np.argmax(r.vx) - r.truth[0]) ** 2 + (np.argmax(r.vy) - r.truth[1]) ** 2
                sq.append(d2)
                dist.append(math.sqrt(d2))
        expected[f"{scale}_accuracy"] = correct / len(records)
        expected[f"{scale}_rmse_px"] = math.sqrt(sum(sq) / len(sq))
        expected[f"{scale}_mean_dist_px"] = math.fsum(dist) / len(dist)
    preds = np.array([p for p, _ in events])
    targets = np.array([t for _, t in events])
    expected["pce"] = float(np.mean((preds > 0.5) == (targets > 0.5)))
    expected["spce"] = float(np.mean(np.abs(preds - targets) < 0.25))
    for c, name in enumerate(("human", "table", "scoreboard")):
        inter = sum(np.logical_and(p[c] > 0.5, t[c] > 0.5).sum() for p, t in segs)
        union = sum(np.logical_or(p[c] > 0.5, t[c] > 0.5).sum() for p, t in segs)
        expected[f"iou_{name}"] = inter / union
    return expected


class TestAccumulator:

    def test_matches_brute_force(self):
        stream = _random_stream(7, 1000)
        report = _accumulate(*stream).report()
        for key, value in _brute_force(*stream).items():
            assert getattr(report, key) == pytest.approx(value, abs=1e-12), key

    def test_merge_equals_concatenation(self):
        balls, events, segs = _random_stream(11, 300)
        whole = _accumulate(balls, events, segs)
        parts = [_accumulate(balls[i:i + 100], events[i:i + 100], segs[i:i + 100]) for i in range(0, 300, 100)]
        assert merge_all(parts) == whole

    def test_merge_associative_and_commutative(self):
        a, b, c = (_accumulate(*_random_stream(seed, 50)) for seed in (1, 2, 3))
        left = a.merge(b).merge(c)
        assert a.merge(b.merge(c)) == left
        assert c.merge(a).merge(b) == left
        assert left.report() == b.merge(c).merge(a).report()

    def test_merge_does_not_mutate(self):
        a = _accumulate(*_random_stream(4, 20))
        snapshot = replace(a, ball=dict(a.ball), pce_correct=list(a.pce_correct))
        a.merge(_accumulate(*_random_stream(5, 20)))
        assert a.ball == snapshot.ball and a.pce_correct == snapshot.pce_correct

    def test_empty_report_is_nan(self):
        report = MetricAccumulator().report()
        assert math.isnan(report.local_rmse_px) and math.isnan(report.pce)

    def test_report_key_value_round_trip(self):
        report = _accumulate(*_random_stream(9, 400)).report()
        assert EvaluationReport.from_key_value(report.to_key_value()) == report
