"""Data package - annotation loading, window sampling, augmentation and synthetic clips"""
from .annotations import AnnotationSet, ClipAnnotations, load_annotations
from .augment import AugmentationParams, sample_augmentation
from .dataset import WindowDataset, build_dataset, make_loader
from .openttgames import MaskDecoder, convert_game
from .sampler import SampleEntry, SampleIndex, build_sample_index
from .synthetic import SyntheticSceneConfig, synthesize_clip, synthesize_dataset, write_clip

__all__ = [
    'AnnotationSet',
    'AugmentationParams',
    'ClipAnnotations',
    'MaskDecoder',
    'SampleEntry',
    'SampleIndex',
    'SyntheticSceneConfig',
    'WindowDataset',
    'build_dataset',
    'build_sample_index',
    'convert_game',
    'load_annotations',
    'make_loader',
    'sample_augmentation',
    'synthesize_clip',
    'synthesize_dataset',
    'write_clip',
]
