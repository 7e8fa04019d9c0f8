"""Torch dataset turning sample-index entries into model-ready tensors"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import torch
from torch.utils.data import DataLoader, Dataset

from ..config import TrainConfig
from ..geometry import ResolutionConfig
from ..targets import (
    SIGMA_GLOBAL,
    SegTarget,
    TrainingSample,
    assemble_input,
    build_ball_target,
    downscale_frame,
    global_ball_center,
    subsample_event_sequence,
)
from .annotations import AnnotationSet, load_annotations
from .augment import augment as augment_sample
from .augment import sample_augmentation
from .sampler import SampleEntry, SampleIndex, build_sample_index

logger = logging.getLogger(__name__)


def augmentation_rng(seed: int, epoch: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, epoch, index])


class WindowDataset(Dataset):
    """Yields dicts of tensors for one input stack.

    Keys: ``global`` (3N, h1, w1) float in [0, 1]; ``full`` (3N, h0, w0) uint8;
    ``ball_full`` (2,) and ``ball_present``; ``ball_global_x`` / ``ball_global_y``
    target vectors; ``event`` (2,); ``seg`` (3, h1, w1) and ``seg_present``;
    ``sample_id``.
    """

    def __init__(
        self,
        annotations: AnnotationSet,
        index: SampleIndex,
        cfg: ResolutionConfig,
        sigma_global: float = SIGMA_GLOBAL,
        augment: bool = False,
        seed: int = 0,
    ):
        self.annotations = annotations
        self.index = index
        self.cfg = cfg
        self.sigma_global = sigma_global
        self.augment = augment
        self.seed = seed
        self.epoch = 0
        self._clips = {clip.name: clip for clip in annotations}

    def __len__(self) -> int:
        return len(self.index)

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def load_sample(self, entry: SampleEntry) -> TrainingSample:
        clip = self._clips[entry.clip]
        num_frames = self.index.num_frames
        if entry.is_negative:
            window = clip.window_clip(entry.start, num_frames, self.cfg)
            sample = subsample_event_sequence(window, 0, num_frames)
            sample.meta.pop("offset", None)
            sample.meta["negative"] = True
        else:
            event_clip = clip.event_clip(entry.anchor, self.cfg)
            sample = subsample_event_sequence(event_clip, entry.window_start, num_frames)
            sample.meta["negative"] = False
        sample.meta["clip"] = entry.clip
        sample.meta["start"] = entry.start
        return sample

    def to_tensors(self, sample: TrainingSample, sample_id: int) -> dict[str, torch.Tensor]:
        cfg = self.cfg
        num_frames = self.index.num_frames
        full = assemble_input(sample.frames, num_frames)
        global_stack = assemble_input([downscale_frame(f, cfg) for f in sample.frames], num_frames)

        present = sample.ball_full is not None
        ball_full = sample.ball_full if present else (0.0, 0.0)
        center = global_ball_center(*ball_full, cfg) if present else None
        target = build_ball_target(center, cfg.w1, cfg.h1, self.sigma_global)

        seg = sample.seg if sample.seg is not None else SegTarget.empty(cfg)
        return {
            "global": torch.from_numpy(global_stack).float() / 255.0,
            "full": torch.from_numpy(full),
            "ball_full": torch.tensor(ball_full, dtype=torch.float64),
            "ball_present": torch.tensor(present),
            "ball_global_x": torch.from_numpy(target.vx),
            "ball_global_y": torch.from_numpy(target.vy),
            "event": torch.from_numpy(sample.event.as_array()),
            "seg": torch.from_numpy(seg.masks.astype(np.float32)),
            "seg_present": torch.tensor(sample.seg is not None),
            "sample_id": torch.tensor(sample_id),
        }

    def __getitem__(self, i: int) -> dict[str, torch.Tensor]:
        sample = self.load_sample(self.index[i])
        if self.augment:
            params = sample_augmentation(augmentation_rng(self.seed, self.epoch, i))
            sample = augment_sample(sample, params, self.cfg)
        return self.to_tensors(sample, i)


def make_loader(
    dataset: WindowDataset,
    batch_size: int,
    shuffle: bool,
    seed: int,
    epoch: int = 0,
    num_workers: int = 0,
) -> DataLoader:
    """Loader whose order depends only on (seed, epoch)"""
    dataset.set_epoch(epoch)
    generator = torch.Generator()
    generator.manual_seed(seed * 100_003 + epoch)
    return DataLoader(
        dataset,
        batch_size=batch_size,
        shuffle=shuffle,
        generator=generator,
        num_workers=num_workers,
        drop_last=False,
    )


def build_dataset(root: str | Path, cfg: TrainConfig, augment: bool, fail_fast: bool = False) -> WindowDataset:
    """Annotations, sample index and dataset for one split directory"""
    annotations = load_annotations(root, cfg.resolution, fail_fast=fail_fast)
    index = build_sample_index(annotations, cfg.negatives_ratio, cfg.seed, cfg.num_frames)
    logger.info("Split %s: %d positive and %d negative windows", root, index.positives, index.negatives)
    return WindowDataset(annotations, index, cfg.resolution, cfg.sigma_global, augment=augment, seed=cfg.seed)
