"""VGG-style feature extractor shared by the ball, event and segmentation branches"""
from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .blocks import ConvBlock, scaled_channels

DOWNSAMPLE = 64
BASE_CHANNELS = (64, 64, 64, 128, 128, 256, 256)


@dataclass
class EncoderOutput:
    """Final 1/64-scale features plus the intermediate maps used as skips.

    ``skips`` is ordered from the finest (1/2 scale) to the coarsest (1/32 scale).
    """
    final: torch.Tensor
    skips: list[torch.Tensor]


class Encoder(nn.Module):
    """1x1 stem followed by six ConvBlocks with dropout after every second block"""

    def __init__(self, in_channels: int = 27, multiplier: float = 1.0, dropout: float = 0.25):
        super().__init__()
        c = [scaled_channels(ch, multiplier) for ch in BASE_CHANNELS]
        self.in_channels = in_channels
        self.channels = c
        self.stem = nn.Sequential(
            nn.Conv2d(in_channels, c[0], kernel_size=1),
            nn.BatchNorm2d(c[0]),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.ModuleList(ConvBlock(c[i], c[i + 1]) for i in range(6))
        self.dropout = nn.Dropout(dropout)

    @property
    def out_channels(self) -> int:
        return self.channels[-1]

    def forward(self, x: torch.Tensor) -> EncoderOutput:
        if x.dim() != 4 or x.shape[1] != self.in_channels:
            raise ValueError(f"expected (B, {self.in_channels}, H, W) input, got {tuple(x.shape)}")
        height, width = x.shape[-2:]
        if height % DOWNSAMPLE or width % DOWNSAMPLE:
            raise ValueError(f"input size {width}x{height} must be divisible by {DOWNSAMPLE}")

        x = self.stem(x)
        skips = []
        for i, block in enumerate(self.blocks):
            x = block(x)
            if i % 2 == 1:
                x = self.dropout(x)
            skips.append(x)
        return EncoderOutput(final=skips[-1], skips=skips[:-1])
