"""Parameter and FLOP counting for the network"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import torch
from torch import nn

from ..geometry import ResolutionConfig
from .ttnet import TTNet

Scope = Literal["encoder", "full"]
CONV_TYPES = (nn.Conv2d, nn.ConvTranspose2d)


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    macs: int
    output_shape: tuple[int, ...]


def _scope_module(model: TTNet, scope: Scope) -> nn.Module:
    if scope == "encoder":
        return model.global_encoder
    if scope == "full":
        return model
    raise ValueError(f"unknown scope {scope!r}")


def count_parameters(model: TTNet, scope: Scope = "full") -> int:
    """Trainable scalars in scope"""
    return sum(p.numel() for p in _scope_module(model, scope).parameters() if p.requires_grad)


def count_conv_parameters(module: nn.Module) -> int:
    """Convolution weights and biases only"""
    return sum(p.numel() for m in module.modules() if isinstance(m, CONV_TYPES) for p in m.parameters())


def layer_costs(encoder: nn.Module, input_shape: tuple[int, int, int]) -> list[LayerCost]:
    """Per-layer multiply-accumulates for one (C, H, W) input"""
    costs: list[LayerCost] = []
    handles = []

    def hook(name: str):
        def record(module: nn.Module, inputs: tuple[torch.Tensor, ...], output: torch.Tensor) -> None:
            kh, kw = module.kernel_size
            if isinstance(module, nn.ConvTranspose2d):
                per_position = module.out_channels // module.groups * kh * kw
                macs = inputs[0][0].numel() * per_position
            elif isinstance(module, nn.Conv2d):
                per_position = module.in_channels // module.groups * kh * kw
                macs = output[0].numel() * per_position
            else:
                return
            costs.append(LayerCost(name, type(module).__name__, int(macs), tuple(output.shape[1:])))
        return record

    for name, module in encoder.named_modules():
        if isinstance(module, CONV_TYPES):
            handles.append(module.register_forward_hook(hook(name)))
    was_training = encoder.training
    encoder.eval()
    try:
        with torch.no_grad():
            encoder(torch.zeros(1, *input_shape))
    finally:
        for handle in handles:
            handle.remove()
        encoder.train(was_training)
    return costs


def count_macs(model: TTNet, scope: Scope = "encoder") -> int:
    """Multiply-accumulates of the convolution layers for one global input stack"""
    if scope != "encoder":
        raise ValueError("MAC counting is defined for the encoder scope only")
    cfg = model.cfg
    shape = (model.global_encoder.in_channels, cfg.h1, cfg.w1)
    return sum(cost.macs for cost in layer_costs(model.global_encoder, shape))


def count_flops(model: TTNet, scope: Scope = "encoder") -> int:
    """FLOPs with the 2-per-MAC convention"""
    return 2 * count_macs(model, scope)


@dataclass(frozen=True)
class ArchitectureSummary:
    multiplier: float
    encoder_params: int
    encoder_conv_params: int
    full_params: int
    encoder_macs: int
    encoder_flops: int


# Reference figures for the full-width encoder
REFERENCE_ENCODER_PARAMS = 1_180_000
REFERENCE_ENCODER_GFLOPS = 2.34
REFERENCE_INFERENCE_MS = 6.0


def summarize_architecture(
    multiplier: float = 1.0,
    cfg: ResolutionConfig | None = None,
    num_frames: int = 9,
) -> ArchitectureSummary:
    model = TTNet(cfg, num_frames=num_frames, multiplier=multiplier)
    return ArchitectureSummary(
        multiplier=multiplier,
        encoder_params=count_parameters(model, "encoder"),
        encoder_conv_params=count_conv_parameters(model.global_encoder),
        full_params=count_parameters(model, "full"),
        encoder_macs=count_macs(model),
        encoder_flops=count_flops(model),
    )
