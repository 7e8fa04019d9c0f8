"""Fully connected ball head and the event spotting head"""
from __future__ import annotations

import torch
from torch import nn

from .blocks import ConvBlock, scaled_channels


class BallHead(nn.Module):
    """Shared FC trunk with parallel x and y branches ending in sigmoids"""

    def __init__(
        self,
        in_features: int,
        width: int,
        height: int,
        multiplier: float = 1.0,
        dropout: float = 0.5,
    ):
        super().__init__()
        trunk = scaled_channels(1792, multiplier)
        x_units = scaled_channels(640, multiplier)
        y_units = scaled_channels(256, multiplier)
        self.in_features = in_features
        self.trunk = nn.Sequential(
            nn.Flatten(),
            nn.Linear(in_features, trunk),
            nn.ReLU(inplace=True),
            nn.Dropout(dropout),
        )
        self.x_branch = nn.Sequential(
            nn.Linear(trunk, x_units),
            nn.ReLU(inplace=True),
            nn.Dropout(dropout),
            nn.Linear(x_units, width),
            nn.Sigmoid(),
        )
        self.y_branch = nn.Sequential(
            nn.Linear(trunk, y_units),
            nn.ReLU(inplace=True),
            nn.Dropout(dropout),
            nn.Linear(y_units, height),
            nn.Sigmoid(),
        )

    def forward(self, features: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        if features[0].numel() != self.in_features:
            raise ValueError(f"expected {self.in_features} features per item, got {features[0].numel()}")
        h = self.trunk(features)
        return self.x_branch(h), self.y_branch(h)


class EventHead(nn.Module):
    """Bounce / net-hit probabilities from the concatenated global and local features"""

    def __init__(
        self,
        in_channels: int,
        cells: int,
        multiplier: float = 1.0,
        conv_dropout: float = 0.25,
    ):
        super().__init__()
        c = scaled_channels(64, multiplier)
        hidden = scaled_channels(512, multiplier)
        self.in_channels = in_channels
        self.features = nn.Sequential(
            nn.Conv2d(in_channels, c, kernel_size=1),
            nn.BatchNorm2d(c),
            nn.ReLU(inplace=True),
            nn.Dropout(conv_dropout),
            ConvBlock(c, c, pool=False),
            nn.Dropout(conv_dropout),
            ConvBlock(c, c, pool=False),
            nn.Dropout(conv_dropout),
            nn.Flatten(),
        )
        self.classifier = nn.Sequential(
            nn.Linear(c * cells, hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, 2),
            nn.Sigmoid(),
        )

    def forward(self, global_features: torch.Tensor, local_features: torch.Tensor) -> torch.Tensor:
        if global_features.shape != local_features.shape:
            raise ValueError(
                f"global and local features differ: {tuple(global_features.shape)} vs {tuple(local_features.shape)}"
            )
        x = torch.cat([global_features, local_features], dim=1)
        if x.shape[1] != self.in_channels:
            raise ValueError(f"expected {self.in_channels} concatenated channels, got {x.shape[1]}")
        return self.classifier(self.features(x))
