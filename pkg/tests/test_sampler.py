"""Tests for the training window index"""
from pathlib import Path

import pytest

from ttvision.data.annotations import AnnotationSet, ClipAnnotations
from ttvision.data.sampler import NEGATIVE_MIN_DISTANCE, build_sample_index


def _annotations(*clips):
    return AnnotationSet(Path("."), [
        ClipAnnotations(name, Path(name), frame_count, "frames/{:06d}.png", events=dict(events))
        for name, frame_count, events in clips
    ])


class TestSampleIndex:

    def test_one_event_gives_seventeen_windows(self):
        index = build_sample_index(_annotations(("a", 60, {30: "bounce"})), negatives_ratio=1.0)
        assert index.positives == 17
        assert index.negatives == 17
        positives = [e for e in index.entries if not e.is_negative]
        assert [e.start for e in positives] == list(range(18, 35))
        assert [e.window_start for e in positives] == list(range(17))
        assert all(e.anchor == 30 for e in positives)

    def test_negatives_are_far_from_events(self):
        index = build_sample_index(_annotations(("a", 60, {30: "bounce"})), negatives_ratio=1.0)
        negatives = [e for e in index.entries if e.is_negative]
        assert len({e.start for e in negatives}) == len(negatives)
        for entry in negatives:
            assert abs(entry.start + 4 - 30) >= NEGATIVE_MIN_DISTANCE == 13
            with pytest.raises(ValueError):
                entry.window_start

    def test_event_too_close_to_clip_edge_is_skipped(self):
        index = build_sample_index(_annotations(("a", 60, {5: "net", 50: "bounce"})), negatives_ratio=0)
        assert len(index) == 0

    def test_ratio_scales_negatives(self):
        ann = _annotations(("a", 200, {40: "bounce", 120: "net"}))
        assert build_sample_index(ann, negatives_ratio=0.5).negatives == 17
        assert build_sample_index(ann, negatives_ratio=0).negatives == 0

    def test_replacement_when_candidates_run_out(self):
        ann = _annotations(("a", 40, {20: "bounce"}))
        index = build_sample_index(ann, negatives_ratio=3.0)
        assert index.negatives == 51

    def test_deterministic_per_seed(self):
        ann = _annotations(("a", 300, {100: "bounce"}), ("b", 300, {150: "net"}))
        first = build_sample_index(ann, 1.0, seed=4)
        assert first.entries == build_sample_index(ann, 1.0, seed=4).entries
        assert first.entries != build_sample_index(ann, 1.0, seed=5).entries

    def test_shorter_stacks(self):
        index = build_sample_index(_annotations(("a", 60, {30: "bounce"})), negatives_ratio=0, num_frames=3)
        assert index.positives == 23

    def test_negative_ratio_rejected(self):
        with pytest.raises(ValueError):
            build_sample_index(_annotations(("a", 60, {30: "bounce"})), negatives_ratio=-1)
