"""Index of training windows: every window around each labeled event plus sampled negatives"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..targets import CLIP_EVENT_INDEX, CLIP_LENGTH, DEFAULT_NUM_FRAMES, middle_index
from .annotations import AnnotationSet

logger = logging.getLogger(__name__)

# Middle frames closer than this to an event are never used as negatives
NEGATIVE_MIN_DISTANCE = CLIP_EVENT_INDEX + 1


@dataclass(frozen=True)
class SampleEntry:
    """One input window.

    ``start`` is the clip-absolute index of the window's first frame. Positive
    windows also carry their anchor event frame.
    """
    clip: str
    start: int
    is_negative: bool
    anchor: int | None = None

    @property
    def window_start(self) -> int:
        """Offset of the window inside its 25-frame event clip (positives only)"""
        if self.anchor is None:
            raise ValueError("negative windows have no event clip")
        return self.start - (self.anchor - CLIP_EVENT_INDEX)


@dataclass
class SampleIndex:
    entries: list[SampleEntry]
    num_frames: int = DEFAULT_NUM_FRAMES

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> SampleEntry:
        return self.entries[index]

    @property
    def positives(self) -> int:
        return sum(not e.is_negative for e in self.entries)

    @property
    def negatives(self) -> int:
        return sum(e.is_negative for e in self.entries)


def _negative_candidates(ann: AnnotationSet, num_frames: int) -> list[tuple[str, int]]:
    candidates = []
    mid = middle_index(num_frames)
    for clip in ann:
        event_frames = np.array(sorted(clip.events), dtype=np.int64)
        for start in range(clip.frame_count - num_frames + 1):
            middle = start + mid
            if event_frames.size and np.min(np.abs(event_frames - middle)) < NEGATIVE_MIN_DISTANCE:
                continue
            candidates.append((clip.name, start))
    return candidates


def build_sample_index(
    ann: AnnotationSet,
    negatives_ratio: float = 1.0,
    seed: int = 0,
    num_frames: int = DEFAULT_NUM_FRAMES,
) -> SampleIndex:
    """Enumerate positive windows and draw ``negatives_ratio`` times as many negatives.

    Each labeled event yields the ``25 - num_frames + 1`` windows of the 25-frame clip
    centred on it; clips without room for that clip are skipped with a warning.
    Negatives are drawn uniformly, without replacement when possible, from windows
    whose middle frame is at least 13 frames from every event.
    """
    if negatives_ratio < 0:
        raise ValueError(f"negatives_ratio must be non-negative, got {negatives_ratio}")
    entries: list[SampleEntry] = []
    for clip in ann:
        for event_frame, _ in clip.event_frames():
            clip_start = event_frame - CLIP_EVENT_INDEX
            if clip_start < 0 or clip_start + CLIP_LENGTH > clip.frame_count:
                logger.warning("Skipping event at %s#%d: clip of %d frames has no room for a %d-frame window",
                               clip.name, event_frame, clip.frame_count, CLIP_LENGTH)
                continue
            entries.extend(
                SampleEntry(clip.name, clip_start + k, False, event_frame)
                for k in range(CLIP_LENGTH - num_frames + 1)
            )

    positives = len(entries)
    wanted = round(negatives_ratio * positives)
    if wanted:
        candidates = _negative_candidates(ann, num_frames)
        if not candidates:
            logger.warning("No frames far enough from events to draw %d negatives", wanted)
        else:
            rng = np.random.default_rng(seed)
            replace = wanted > len(candidates)
            if replace:
                logger.warning("Only %d negative windows available; sampling %d with replacement",
                               len(candidates), wanted)
            picks = rng.choice(len(candidates), size=wanted, replace=replace)
            entries.extend(SampleEntry(*candidates[i], True) for i in sorted(picks.tolist()))

    logger.debug("Sample index: %d positives, %d negatives", positives, len(entries) - positives)
    return SampleIndex(entries, num_frames)
