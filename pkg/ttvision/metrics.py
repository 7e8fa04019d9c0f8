"""Evaluation metrics with mergeable streaming accumulators.

Ball: presence accuracy and positional error over true positives, per scale.
Events: PCE (same side of 0.5 as the target) and SPCE (within 0.25 of the target).
Segmentation: per-class IoU of the 0.5-thresholded maps.

Accumulators keep exact rational sums so shard merges are order independent.
"""
from __future__ import annotations

import math
from collections.abc import Iterable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np

from .models import EvaluationReport
from .targets import EVENT_TYPES, SEG_CLASSES

Scale = Literal["global", "local"]
SCALES: tuple[Scale, ...] = ("global", "local")
PRESENCE_THRESHOLD = 0.5
EVENT_THRESHOLD = 0.5
SPCE_TOLERANCE = 0.25


@dataclass
class BallEvalRecord:
    """Predicted vectors for one frame and the labeled centre in the same frame"""
    vx: np.ndarray
    vy: np.ndarray
    truth: tuple[float, float] | None
    scale: Scale


def decide_presence(vx: np.ndarray, vy: np.ndarray, threshold: float = PRESENCE_THRESHOLD) -> bool:
    """Ball present iff both thresholded vectors have a non-zero entry"""
    return bool(np.max(vx) > threshold and np.max(vy) > threshold)


def predicted_center(vx: np.ndarray, vy: np.ndarray, threshold: float = PRESENCE_THRESHOLD) -> tuple[int, int]:
    """Argmax of each vector; ties go to the lower index"""
    if not decide_presence(vx, vy, threshold):
        raise ValueError("no ball present in prediction")
    return int(np.argmax(vx)), int(np.argmax(vy))


def pce(pred: np.ndarray, target: np.ndarray, threshold: float = EVENT_THRESHOLD) -> tuple[bool, ...]:
    """Per event type: prediction and target fall on the same side of the threshold"""
    pred, target = np.asarray(pred), np.asarray(target)
    return tuple(bool(v) for v in (pred > threshold) == (target > threshold))


def spce(pred: np.ndarray, target: np.ndarray, tol: float = SPCE_TOLERANCE) -> tuple[bool, ...]:
    """Per event type: prediction within ``tol`` of the target"""
    pred, target = np.asarray(pred, dtype=np.float64), np.asarray(target, dtype=np.float64)
    return tuple(bool(v) for v in np.abs(pred - target) < tol)


def intersection_union(pred_map: np.ndarray, target_map: np.ndarray, threshold: float = 0.5) -> tuple[int, int]:
    if pred_map.shape != target_map.shape:
        raise ValueError(f"map shape mismatch: {pred_map.shape} vs {target_map.shape}")
    predicted = pred_map > threshold
    truth = target_map > 0.5
    return int(np.logical_and(predicted, truth).sum()), int(np.logical_or(predicted, truth).sum())


def iou(pred_map: np.ndarray, target_map: np.ndarray, threshold: float = 0.5) -> float:
    """IoU of the thresholded prediction with a binary target; both empty counts as 1.0"""
    inter, union = intersection_union(pred_map, target_map, threshold)
    return 1.0 if union == 0 else inter / union


@dataclass
class BallCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0
    sum_sq: Fraction = Fraction(0)
    sum_dist: Fraction = Fraction(0)

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def merge(self, other: BallCounts) -> BallCounts:
        return BallCounts(
            self.tp + other.tp, self.tn + other.tn, self.fp + other.fp, self.fn + other.fn,
            self.sum_sq + other.sum_sq, self.sum_dist + other.sum_dist,
        )


def _zeros(n: int) -> list[int]:
    return [0] * n


@dataclass
class MetricAccumulator:
    """Running counts for every metric; single writer, combine shards with merge"""
    ball: dict[str, BallCounts] = field(default_factory=lambda: {s: BallCounts() for s in SCALES})
    pce_correct: list[int] = field(default_factory=lambda: _zeros(len(EVENT_TYPES)))
    spce_correct: list[int] = field(default_factory=lambda: _zeros(len(EVENT_TYPES)))
    events_total: int = 0
    intersection: list[int] = field(default_factory=lambda: _zeros(len(SEG_CLASSES)))
    union: list[int] = field(default_factory=lambda: _zeros(len(SEG_CLASSES)))
    seg_maps: int = 0

    def add_ball(self, record: BallEvalRecord) -> None:
        counts = self.ball[record.scale]
        present = decide_presence(record.vx, record.vy)
        if record.truth is None:
            if present:
                counts.fp += 1
            else:
                counts.tn += 1
            return
        if not present:
            counts.fn += 1
            return
        counts.tp += 1
        px, py = predicted_center(record.vx, record.vy)
        sq = Fraction(px) - Fraction(record.truth[0])
        sq = sq * sq + (Fraction(py) - Fraction(record.truth[1])) ** 2
        counts.sum_sq += sq
        counts.sum_dist += Fraction(math.sqrt(sq))

    def add_event(self, pred: np.ndarray, target: np.ndarray) -> None:
        for i, (ok_pce, ok_spce) in enumerate(zip(pce(pred, target), spce(pred, target), strict=True)):
            self.pce_correct[i] += int(ok_pce)
            self.spce_correct[i] += int(ok_spce)
        self.events_total += 1

    def add_segmentation(self, pred_maps: np.ndarray, target_masks: np.ndarray) -> None:
        """Add one (3, H, W) prediction and its binary masks"""
        if pred_maps.shape[0] != len(SEG_CLASSES):
            raise ValueError(f"expected {len(SEG_CLASSES)} class maps, got {pred_maps.shape[0]}")
        for c in range(len(SEG_CLASSES)):
            inter, union = intersection_union(pred_maps[c], target_masks[c])
            self.intersection[c] += inter
            self.union[c] += union
        self.seg_maps += 1

    def merge(self, other: MetricAccumulator) -> MetricAccumulator:
        return MetricAccumulator(
            ball={s: self.ball[s].merge(other.ball[s]) for s in SCALES},
            pce_correct=[a + b for a, b in zip(self.pce_correct, other.pce_correct, strict=True)],
            spce_correct=[a + b for a, b in zip(self.spce_correct, other.spce_correct, strict=True)],
            events_total=self.events_total + other.events_total,
            intersection=[a + b for a, b in zip(self.intersection, other.intersection, strict=True)],
            union=[a + b for a, b in zip(self.union, other.union, strict=True)],
            seg_maps=self.seg_maps + other.seg_maps,
        )

    def report(self) -> EvaluationReport:
        values: dict[str, float] = {}
        for scale in SCALES:
            counts = self.ball[scale]
            values[f"{scale}_accuracy"] = ball_accuracy(self, scale) if counts.total else math.nan
            values[f"{scale}_rmse_px"] = ball_rmse(self, scale) if counts.tp else math.nan
            values[f"{scale}_mean_dist_px"] = mean_distance(self, scale) if counts.tp else math.nan
        if self.events_total:
            values["pce"] = event_score(self, "pce")
            values["spce"] = event_score(self, "spce")
        if self.seg_maps:
            ious = [class_iou(self, c) for c in range(len(SEG_CLASSES))]
            values.update({f"iou_{name}": value for name, value in zip(SEG_CLASSES, ious, strict=True)})
            values["mean_iou"] = sum(ious) / len(ious)
        return EvaluationReport(**values)


def merge_all(accumulators: Iterable[MetricAccumulator]) -> MetricAccumulator:
    merged = MetricAccumulator()
    for acc in accumulators:
        merged = merged.merge(acc)
    return merged


def ball_accuracy(acc: MetricAccumulator, scale: Scale = "local") -> float:
    counts = acc.ball[scale]
    if counts.total == 0:
        raise ValueError(f"no {scale} ball records accumulated")
    return (counts.tp + counts.tn) / counts.total


def ball_rmse(acc: MetricAccumulator, scale: Scale = "local") -> float:
    """Root mean squared Euclidean error over true positives"""
    counts = acc.ball[scale]
    if counts.tp == 0:
        raise ValueError(f"no {scale} true-positive detections")
    return math.sqrt(counts.sum_sq / counts.tp)


def mean_distance(acc: MetricAccumulator, scale: Scale = "local") -> float:
    counts = acc.ball[scale]
    if counts.tp == 0:
        raise ValueError(f"no {scale} true-positive detections")
    return float(counts.sum_dist / counts.tp)


def event_score(acc: MetricAccumulator, kind: Literal["pce", "spce"] = "pce", event_type: str | None = None) -> float:
    """Fraction of correct event decisions, over both types or one"""
    if acc.events_total == 0:
        raise ValueError("no event predictions accumulated")
    correct = acc.pce_correct if kind == "pce" else acc.spce_correct
    if event_type is None:
        return sum(correct) / (acc.events_total * len(correct))
    return correct[EVENT_TYPES.index(event_type)] / acc.events_total


def class_iou(acc: MetricAccumulator, class_index: int) -> float:
    union = acc.union[class_index]
    return 1.0 if union == 0 else acc.intersection[class_index] / union
