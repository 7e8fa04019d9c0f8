"""Loading and validating per-clip annotation manifests.

Dataset layout::

    <root>/<clip>/annotations.json     events / ball / masks keyed by frame number
    <root>/<clip>/frames/000000.png    pre-extracted RGB frames (w0 x h0)
    <root>/<clip>/masks/000000.png     class masks (w1 x h1), R=human G=table B=scoreboard
"""
from __future__ import annotations

import json
import logging
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Generic, TypeVar, overload

import cv2
import numpy as np
from pydantic import ValidationError

from ..errors import AnnotationError, AnnotationIssue
from ..geometry import ResolutionConfig
from ..models import ClipManifest
from ..targets import CLIP_EVENT_INDEX, CLIP_LENGTH, EVENT_TYPES, EventClip, EventType, SegTarget

logger = logging.getLogger(__name__)

MANIFEST_NAME = "annotations.json"
T = TypeVar("T")


class LazySequence(Sequence, Generic[T]):
    """Read-on-access sequence; slicing loads only the requested items"""

    def __init__(self, length: int, loader: Callable[[int], T]):
        self._length = length
        self._loader = loader

    def __len__(self) -> int:
        return self._length

    @overload
    def __getitem__(self, index: int) -> T: ...

    @overload
    def __getitem__(self, index: slice) -> list[T]: ...

    def __getitem__(self, index: int | slice) -> T | list[T]:
        if isinstance(index, slice):
            return [self._loader(i) for i in range(*index.indices(self._length))]
        if index < 0:
            index += self._length
        if not 0 <= index < self._length:
            raise IndexError(index)
        return self._loader(index)


def read_rgb(path: Path) -> np.ndarray:
    image = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if image is None:
        raise OSError(f"cannot read image {path}")
    return cv2.cvtColor(image, cv2.COLOR_BGR2RGB)


def write_rgb(path: Path, image: np.ndarray) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(path), cv2.cvtColor(image, cv2.COLOR_RGB2BGR)):
        raise OSError(f"cannot write image {path}")


@dataclass
class ClipAnnotations:
    """Validated annotations of one clip; frame numbers are clip-absolute"""
    name: str
    directory: Path
    frame_count: int
    frame_pattern: str
    events: dict[int, EventType] = field(default_factory=dict)
    balls: dict[int, tuple[float, float]] = field(default_factory=dict)
    masks: dict[int, Path] = field(default_factory=dict)

    def frame_path(self, frame: int) -> Path:
        return self.directory / self.frame_pattern.format(frame)

    def read_frame(self, frame: int) -> np.ndarray:
        return read_rgb(self.frame_path(frame))

    def read_mask(self, frame: int, cfg: ResolutionConfig) -> SegTarget | None:
        path = self.masks.get(frame)
        if path is None:
            return None
        image = read_rgb(path)
        if image.shape[:2] != (cfg.h1, cfg.w1):
            raise AnnotationError([AnnotationIssue(
                self.name, frame, f"mask is {image.shape[1]}x{image.shape[0]}, expected {cfg.w1}x{cfg.h1}")])
        return SegTarget((image.transpose(2, 0, 1) > 127).astype(np.uint8))

    def event_frames(self) -> list[tuple[int, EventType]]:
        return sorted(self.events.items())

    def window_clip(self, start: int, length: int, cfg: ResolutionConfig, event_index: int = CLIP_EVENT_INDEX) -> EventClip:
        """Lazy EventClip over frames [start, start + length)"""
        if start < 0 or start + length > self.frame_count:
            raise ValueError(f"{self.name}: frames [{start}, {start + length}) outside 0..{self.frame_count - 1}")
        return EventClip(
            frames=LazySequence(length, lambda i: self.read_frame(start + i)),
            events={frame - start: kind for frame, kind in self.events.items()},
            balls=LazySequence(length, lambda i: self.balls.get(start + i)),
            masks=LazySequence(length, lambda i: self.read_mask(start + i, cfg)),
            event_index=event_index,
        )

    def event_clip(self, event_frame: int, cfg: ResolutionConfig) -> EventClip:
        """The 25 frames with the labeled event in the middle"""
        return self.window_clip(event_frame - CLIP_EVENT_INDEX, CLIP_LENGTH, cfg)


@dataclass
class AnnotationSet:
    root: Path
    clips: list[ClipAnnotations]
    issues: list[AnnotationIssue] = field(default_factory=list)

    def __iter__(self) -> Iterator[ClipAnnotations]:
        return iter(self.clips)

    def __len__(self) -> int:
        return len(self.clips)

    def clip(self, name: str) -> ClipAnnotations:
        for clip in self.clips:
            if clip.name == name:
                return clip
        raise KeyError(name)

    @property
    def positive_anchors(self) -> int:
        return sum(len(clip.events) for clip in self.clips)


def _count_frames(directory: Path, pattern: str) -> int:
    count = 0
    while (directory / pattern.format(count)).is_file():
        count += 1
    return count


def _load_clip(
    directory: Path,
    cfg: ResolutionConfig,
    report: Callable[[AnnotationIssue], None],
) -> ClipAnnotations | None:
    name = directory.name
    try:
        raw = json.loads((directory / MANIFEST_NAME).read_text(encoding="utf-8"))
        manifest = ClipManifest.model_validate(raw)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        report(AnnotationIssue(name, None, f"unreadable manifest: {exc}".splitlines()[0]))
        return None

    frame_count = _count_frames(directory, manifest.frame_pattern)
    clip = ClipAnnotations(name, directory, frame_count, manifest.frame_pattern)

    for frame, label in sorted(manifest.events.items()):
        if not 0 <= frame < frame_count:
            report(AnnotationIssue(name, frame, "event references a missing frame"))
        elif label in EVENT_TYPES:
            clip.events[frame] = label

    for frame, (x, y) in sorted(manifest.ball.items()):
        if not 0 <= frame < frame_count:
            report(AnnotationIssue(name, frame, "ball references a missing frame"))
        elif not (0 <= x < cfg.w0 and 0 <= y < cfg.h0):
            report(AnnotationIssue(name, frame, f"ball ({x}, {y}) outside {cfg.w0}x{cfg.h0}"))
        else:
            clip.balls[frame] = (float(x), float(y))

    for frame, relative in sorted(manifest.masks.items()):
        path = directory / relative
        if not 0 <= frame < frame_count:
            report(AnnotationIssue(name, frame, "mask references a missing frame"))
        elif not path.is_file():
            report(AnnotationIssue(name, frame, f"mask file {relative} not found"))
        else:
            clip.masks[frame] = path

    if frame_count:
        first = cv2.imread(str(clip.frame_path(0)), cv2.IMREAD_UNCHANGED)
        if first is None or first.shape[:2] != (cfg.h0, cfg.w0):
            shape = None if first is None else f"{first.shape[1]}x{first.shape[0]}"
            report(AnnotationIssue(name, 0, f"frame size {shape} differs from {cfg.w0}x{cfg.h0}"))
            return None
    return clip


def load_annotations(
    root: str | Path,
    cfg: ResolutionConfig | None = None,
    fail_fast: bool = False,
) -> AnnotationSet:
    """Load every clip directory under ``root``.

    Invalid entries are reported as AnnotationIssue diagnostics. With ``fail_fast``
    the first issue raises AnnotationError; otherwise issues are logged as warnings,
    the offending entries are dropped and loading continues.
    """
    root = Path(root)
    if not root.is_dir():
        raise AnnotationError([AnnotationIssue(str(root), None, "dataset directory does not exist")])
    cfg = cfg or ResolutionConfig()
    issues: list[AnnotationIssue] = []

    def report(issue: AnnotationIssue) -> None:
        if fail_fast:
            raise AnnotationError([issue])
        logger.warning("Annotation issue: %s", issue)
        issues.append(issue)

    clips = []
    for directory in sorted(p for p in root.iterdir() if (p / MANIFEST_NAME).is_file()):
        clip = _load_clip(directory, cfg, report)
        if clip is not None:
            clips.append(clip)

    annotations = AnnotationSet(root, clips, issues)
    logger.info("Loaded %d clips with %d labeled events from %s (%d issues)",
                len(clips), annotations.positive_anchors, root, len(issues))
    return annotations
