"""The multi-task network: twin ball detectors, event head and segmentation decoder"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import torch
from torch import nn

from ..geometry import CropWindow, ResolutionConfig
from .crop import CropPolicy, choose_crop_centers, crop_windows, extract_crops
from .decoder import SegmentationDecoder
from .encoder import DOWNSAMPLE, Encoder, EncoderOutput
from .heads import BallHead, EventHead

logger = logging.getLogger(__name__)


@dataclass
class TTNetOutput:
    global_x: torch.Tensor
    global_y: torch.Tensor
    local_x: torch.Tensor
    local_y: torch.Tensor
    events: torch.Tensor
    seg: torch.Tensor
    windows: list[CropWindow]

    @property
    def crop_origins(self) -> torch.Tensor:
        return torch.tensor([[w.x_origin, w.y_origin] for w in self.windows], dtype=torch.float64)


def _as_unit_float(x: torch.Tensor, dtype: torch.dtype) -> torch.Tensor:
    if x.dtype == torch.uint8:
        return x.to(dtype) / 255.0
    return x.to(dtype)


class TTNet(nn.Module):
    """Global and local detectors share an architecture but not parameters.

    The global encoder's intermediate maps feed the segmentation decoder; the
    final maps of both encoders are concatenated for event spotting.
    """

    def __init__(
        self,
        cfg: ResolutionConfig | None = None,
        num_frames: int = 9,
        multiplier: float = 1.0,
        conv_dropout: float = 0.25,
        fc_dropout: float = 0.5,
    ):
        super().__init__()
        cfg = cfg or ResolutionConfig()
        for name, size in (("global", cfg.global_size), ("local", cfg.local_size)):
            if size[0] % DOWNSAMPLE or size[1] % DOWNSAMPLE:
                raise ValueError(f"{name} size {size[0]}x{size[1]} must be divisible by {DOWNSAMPLE}")
        global_cells = (cfg.w1 // DOWNSAMPLE) * (cfg.h1 // DOWNSAMPLE)
        local_cells = (cfg.w2 // DOWNSAMPLE) * (cfg.h2 // DOWNSAMPLE)
        if (cfg.w1 // DOWNSAMPLE, cfg.h1 // DOWNSAMPLE) != (cfg.w2 // DOWNSAMPLE, cfg.h2 // DOWNSAMPLE):
            raise ValueError("global and local inputs must give the same feature grid for event spotting")

        self.cfg = cfg
        self.num_frames = num_frames
        self.multiplier = multiplier
        in_channels = 3 * num_frames

        self.global_encoder = Encoder(in_channels, multiplier, conv_dropout)
        self.local_encoder = Encoder(in_channels, multiplier, conv_dropout)
        feat = self.global_encoder.out_channels
        self.global_ball = BallHead(feat * global_cells, cfg.w1, cfg.h1, multiplier, fc_dropout)
        self.local_ball = BallHead(feat * local_cells, cfg.w2, cfg.h2, multiplier, fc_dropout)
        self.event_head = EventHead(2 * feat, global_cells, multiplier, conv_dropout)
        self.decoder = SegmentationDecoder(self.global_encoder.channels)
        logger.debug("Built TTNet: frames=%d multiplier=%s resolution=%s", num_frames, multiplier, cfg)

    def encode_global(self, global_stack: torch.Tensor) -> EncoderOutput:
        return self.global_encoder(_as_unit_float(global_stack, self._dtype))

    @property
    def _dtype(self) -> torch.dtype:
        return next(self.parameters()).dtype

    def forward(
        self,
        global_stack: torch.Tensor,
        full_frames: torch.Tensor,
        crop_policy: CropPolicy = "predicted",
        ball_full: torch.Tensor | None = None,
        ball_present: torch.Tensor | None = None,
        jitter: tuple[int, int] = (32, 12),
    ) -> TTNetOutput:
        """Run all four branches.

        Args:
            global_stack: (B, 3N, h1, w1) downscaled stack, uint8 or float in [0, 1]
            full_frames: (B, 3N, h0, w0) full-resolution stack, uint8 or float in [0, 1]
            crop_policy: how the local crop centre is chosen
            ball_full: (B, 2) labeled ball centres, needed for ``ground_truth``
            ball_present: (B,) bool, needed for ``ground_truth``
        """
        expected = (self.cfg.h0, self.cfg.w0)
        if tuple(full_frames.shape[-2:]) != expected:
            raise ValueError(f"full frames must be {self.cfg.w0}x{self.cfg.h0}, got {tuple(full_frames.shape)}")

        global_enc = self.encode_global(global_stack)
        global_x, global_y = self.global_ball(global_enc.final)

        centers = choose_crop_centers(crop_policy, global_x, global_y, self.cfg, ball_full, ball_present, jitter)
        windows = crop_windows(centers, self.cfg)
        local_in = _as_unit_float(extract_crops(full_frames, windows), self._dtype)

        local_enc = self.local_encoder(local_in)
        local_x, local_y = self.local_ball(local_enc.final)
        events = self.event_head(global_enc.final, local_enc.final)
        seg = self.decoder(global_enc)
        return TTNetOutput(global_x, global_y, local_x, local_y, events, seg, windows)
