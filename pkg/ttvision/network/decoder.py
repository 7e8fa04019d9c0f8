"""Segmentation decoder with LinkNet-style additive skips"""
from __future__ import annotations

import torch
from torch import nn

from .blocks import DeconvBlock
from .encoder import EncoderOutput

NUM_CLASSES = 3


class SegmentationDecoder(nn.Module):
    """Upsamples the 1/32-scale encoder map back to the global input size.

    Encoder maps at 1/16, 1/8 and 1/4 scale are added after the matching
    DeconvBlock. The two convolutions after the transposed one run at stride 1 so
    the output is exactly the input size (321 -> 319 -> 320 for width 320).
    """

    def __init__(self, encoder_channels: list[int], num_classes: int = NUM_CLASSES):
        super().__init__()
        # encoder_channels: stem, block1..block6 outputs
        c_half, c_quarter, c_eighth, c_sixteenth, c_32nd = encoder_channels[1:6]
        self.decoder4 = DeconvBlock(c_32nd, c_sixteenth)
        self.decoder3 = DeconvBlock(c_sixteenth, c_eighth)
        self.decoder2 = DeconvBlock(c_eighth, c_quarter)
        self.decoder1 = DeconvBlock(c_quarter, c_half)

        head = max(4, c_half // 2)
        self.final_deconv = nn.ConvTranspose2d(c_half, head, kernel_size=3, stride=2, padding=0, output_padding=0)
        self.final_relu1 = nn.ReLU(inplace=True)
        self.final_conv2 = nn.Conv2d(head, head, kernel_size=3, stride=1, padding=0)
        self.final_relu2 = nn.ReLU(inplace=True)
        self.final_conv3 = nn.Conv2d(head, num_classes, kernel_size=2, stride=1, padding=1)
        self.sigmoid = nn.Sigmoid()

    def forward(self, enc: EncoderOutput) -> torch.Tensor:
        _, e2, e3, e4, e5 = enc.skips
        d4 = self.decoder4(e5)
        if d4.shape != e4.shape:
            raise ValueError(f"skip shape mismatch at 1/16 scale: {tuple(d4.shape)} vs {tuple(e4.shape)}")
        d3 = self.decoder3(d4 + e4)
        d2 = self.decoder2(d3 + e3)
        d1 = self.decoder1(d2 + e2)

        x = self.final_relu1(self.final_deconv(d1))
        x = self.final_relu2(self.final_conv2(x))
        return self.sigmoid(self.final_conv3(x))
