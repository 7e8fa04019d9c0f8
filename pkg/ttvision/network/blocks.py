"""Elementary down- and upsampling blocks"""
from __future__ import annotations

import math

import torch
from torch import nn


def scaled_channels(channels: int, multiplier: float) -> int:
    """Scale a channel or unit count, rounded up to a multiple of 4"""
    if not 0 < multiplier <= 1:
        raise ValueError(f"width multiplier must be in (0, 1], got {multiplier}")
    return max(4, 4 * math.ceil(channels * multiplier / 4))


class ConvBlock(nn.Sequential):
    """Conv 3x3 -> BatchNorm -> ReLU [-> MaxPool 2x2]; halves H and W when pooling"""

    def __init__(self, in_channels: int, out_channels: int, pool: bool = True):
        layers: list[nn.Module] = [
            nn.Conv2d(in_channels, out_channels, kernel_size=3, stride=1, padding=1),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        ]
        if pool:
            layers.append(nn.MaxPool2d(kernel_size=2, stride=2))
        super().__init__(*layers)
        self.in_channels = in_channels
        self.out_channels = out_channels


class DeconvBlock(nn.Module):
    """LinkNet-style decoder block; doubles H and W"""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        if in_channels % 4:
            raise ValueError(f"DeconvBlock input channels must be divisible by 4, got {in_channels}")
        mid = in_channels // 4

        # B, a, H, W -> B, a/4, H, W
        self.conv1 = nn.Conv2d(in_channels, mid, kernel_size=1)
        self.norm1 = nn.BatchNorm2d(mid)
        self.relu1 = nn.ReLU(inplace=True)

        # B, a/4, H, W -> B, a/4, 2H, 2W
        self.deconv2 = nn.ConvTranspose2d(mid, mid, kernel_size=3, stride=2, padding=1, output_padding=1)
        self.norm2 = nn.BatchNorm2d(mid)
        self.relu2 = nn.ReLU(inplace=True)

        # B, a/4, 2H, 2W -> B, b, 2H, 2W
        self.conv3 = nn.Conv2d(mid, out_channels, kernel_size=1)
        self.norm3 = nn.BatchNorm2d(out_channels)
        self.relu3 = nn.ReLU(inplace=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.relu1(self.norm1(self.conv1(x)))
        x = self.relu2(self.norm2(self.deconv2(x)))
        return self.relu3(self.norm3(self.conv3(x)))
