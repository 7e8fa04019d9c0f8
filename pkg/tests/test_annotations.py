"""Tests for annotation manifest loading"""
import json

import numpy as np
import pytest

from ttvision.data.annotations import LazySequence, load_annotations, read_rgb, write_rgb
from ttvision.errors import AnnotationError


def _make_clip(root, name, tiny_res, frames=30, manifest=None, frame_size=None):
    clip_dir = root / name
    h, w = frame_size or (tiny_res.h0, tiny_res.w0)
    for i in range(frames):
        write_rgb(clip_dir / "frames" / f"{i:06d}.png", np.full((h, w, 3), i, dtype=np.uint8))
    clip_dir.mkdir(parents=True, exist_ok=True)
    (clip_dir / "annotations.json").write_text(json.dumps(manifest or {}), encoding="utf-8")
    return clip_dir


class TestLoadAnnotations:

    def test_valid_clip(self, tmp_path, tiny_res):
        mask = np.zeros((tiny_res.h1, tiny_res.w1, 3), dtype=np.uint8)
        mask[10:20, 30:40, 1] = 255
        write_rgb(tmp_path / "clip_a" / "masks" / "000007.png", mask)
        _make_clip(tmp_path, "clip_a", tiny_res, manifest={
            "events": {"15": "bounce", "20": "empty"},
            "ball": {"15": [100.5, 60.0]},
            "masks": {"7": "masks/000007.png"},
        })
        ann = load_annotations(tmp_path, tiny_res)
        assert len(ann) == 1 and not ann.issues
        clip = ann.clip("clip_a")
        assert clip.frame_count == 30
        assert clip.events == {15: "bounce"}
        assert clip.balls == {15: (100.5, 60.0)}
        assert int(clip.read_frame(4)[0, 0, 0]) == 4
        seg = clip.read_mask(7, tiny_res)
        assert seg.masks.shape == (3, tiny_res.h1, tiny_res.w1)
        assert seg.masks[1].sum() == 100 and seg.masks[0].sum() == 0
        assert clip.read_mask(8, tiny_res) is None

    def test_bad_entries_are_reported_and_dropped(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, manifest={
            "events": {"15": "bounce", "99": "net"},
            "ball": {"3": [5000.0, 10.0], "4": [10.0, 10.0]},
            "masks": {"5": "masks/missing.png"},
        })
        ann = load_annotations(tmp_path, tiny_res)
        clip = ann.clip("clip_a")
        assert clip.events == {15: "bounce"}
        assert clip.balls == {4: (10.0, 10.0)}
        assert not clip.masks
        assert sorted(issue.frame for issue in ann.issues) == [3, 5, 99]

    def test_fail_fast(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, manifest={"events": {"99": "net"}})
        with pytest.raises(AnnotationError) as exc_info:
            load_annotations(tmp_path, tiny_res, fail_fast=True)
        assert exc_info.value.issues[0].frame == 99
        assert "clip_a#99" in str(exc_info.value)

    def test_unreadable_manifest(self, tmp_path, tiny_res):
        clip_dir = _make_clip(tmp_path, "clip_a", tiny_res, frames=2)
        (clip_dir / "annotations.json").write_text("{not json", encoding="utf-8")
        _make_clip(tmp_path, "clip_b", tiny_res, frames=2)
        ann = load_annotations(tmp_path, tiny_res)
        assert [clip.name for clip in ann] == ["clip_b"]
        assert ann.issues[0].clip == "clip_a"

    def test_unknown_event_label(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, frames=2, manifest={"events": {"0": "serve"}})
        assert load_annotations(tmp_path, tiny_res).issues

    def test_wrong_frame_size(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, frames=2, frame_size=(50, 60))
        ann = load_annotations(tmp_path, tiny_res)
        assert len(ann) == 0
        assert "differs" in ann.issues[0].message

    def test_missing_root(self, tmp_path):
        with pytest.raises(AnnotationError):
            load_annotations(tmp_path / "nope")


class TestClipWindows:

    def test_event_clip_is_lazy_and_relative(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, frames=40, manifest={
            "events": {"20": "net"}, "ball": {"25": [12.0, 34.0]}})
        clip = load_annotations(tmp_path, tiny_res).clip("clip_a")
        event_clip = clip.event_clip(20, tiny_res)
        assert len(event_clip.frames) == 25
        assert event_clip.events[12] == "net"
        assert int(event_clip.frames[0][0, 0, 0]) == 8
        assert event_clip.balls[17] == (12.0, 34.0)
        assert event_clip.balls[0] is None

    def test_window_outside_clip(self, tmp_path, tiny_res):
        _make_clip(tmp_path, "clip_a", tiny_res, frames=20)
        clip = load_annotations(tmp_path, tiny_res).clip("clip_a")
        with pytest.raises(ValueError):
            clip.event_clip(5, tiny_res)


class TestImageIO:

    def test_rgb_order_preserved(self, tmp_path):
        image = np.zeros((4, 6, 3), dtype=np.uint8)
        image[..., 0] = 200
        write_rgb(tmp_path / "x.png", image)
        assert np.array_equal(read_rgb(tmp_path / "x.png"), image)

    def test_unreadable_image(self, tmp_path):
        with pytest.raises(OSError):
            read_rgb(tmp_path / "missing.png")

    def test_lazy_sequence(self):
        calls = []
        seq = LazySequence(5, lambda i: calls.append(i) or i * 10)
        assert seq[-1] == 40 and seq[1:3] == [10, 20]
        assert calls == [4, 1, 2]
        with pytest.raises(IndexError):
            seq[5]
