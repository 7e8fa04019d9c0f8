"""Network package - encoder, heads, decoder and the assembled model"""
from .blocks import ConvBlock, DeconvBlock, scaled_channels
from .complexity import (
    count_conv_parameters,
    count_flops,
    count_macs,
    count_parameters,
    summarize_architecture,
)
from .crop import CropPolicy, choose_crop_centers, crop_windows, extract_crops, predicted_centers
from .decoder import SegmentationDecoder
from .encoder import Encoder, EncoderOutput
from .heads import BallHead, EventHead
from .ttnet import TTNet, TTNetOutput

__all__ = [
    'BallHead',
    'ConvBlock',
    'CropPolicy',
    'DeconvBlock',
    'Encoder',
    'EncoderOutput',
    'EventHead',
    'SegmentationDecoder',
    'TTNet',
    'TTNetOutput',
    'choose_crop_centers',
    'count_conv_parameters',
    'count_flops',
    'count_macs',
    'count_parameters',
    'crop_windows',
    'extract_crops',
    'predicted_centers',
    'scaled_channels',
    'summarize_architecture',
]
