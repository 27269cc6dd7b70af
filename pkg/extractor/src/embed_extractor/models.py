"""VGG-family backbones and the layer taps we expose.

A tap names the activation a job embeds:

* ``gap``   -- conv features globally average-pooled, 512 dims (default)
* ``pool5`` -- flattened conv feature map after the final pooling, 25088 dims
* ``fc1``   -- first fully connected layer after ReLU, 4096 dims
* ``fc2``   -- second fully connected layer after ReLU, 4096 dims

Weights come from the torchvision pretrained catalog (``imagenet``), a
local state-dict file, or a seeded random init for hermetic runs.
"""

from __future__ import annotations

import math
from pathlib import Path

import torch
from torch import nn
from torchvision import models as tv_models

from .errors import ExtractorError

DEFAULT_MODEL = "vgg16"
DEFAULT_LAYER = "gap"

_BACKBONES = {
    "vgg16": (tv_models.vgg16, tv_models.VGG16_Weights.IMAGENET1K_V1),
    "vgg19": (tv_models.vgg19, tv_models.VGG19_Weights.IMAGENET1K_V1),
}

# tap -> embedding width; identical across the VGG variants we ship
LAYER_DIMS = {"gap": 512, "pool5": 25088, "fc1": 4096, "fc2": 4096}

# classifier prefix lengths: Linear+ReLU blocks end at these indices
_FC_SLICE = {"fc1": 2, "fc2": 5}


def available_models() -> list[str]:
    return sorted(_BACKBONES)


def available_layers() -> list[str]:
    return sorted(LAYER_DIMS)


def _seeded_reinit(model: nn.Module, seed: int) -> None:
    """Reinitialize every parameter from one seeded generator.

    Kaiming-style scaling (std = sqrt(2 / fan_in)) keeps activations at
    a usable magnitude through the deep conv stack; biases are zeroed.
    The traversal order of named_parameters is fixed by the module tree,
    so equal seeds give bit-identical weights.
    """
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for name, param in model.named_parameters():
            if param.dim() > 1:
                fan_in = math.prod(param.shape[1:])
                param.normal_(0.0, math.sqrt(2.0 / fan_in), generator=gen)
            else:
                param.zero_()


def load_backbone(model_name: str = DEFAULT_MODEL, weights: str = "imagenet",
                  seed: int = 0) -> nn.Module:
    """Build a VGG backbone in eval mode with the requested weights.

    ``weights`` is ``imagenet`` (torchvision pretrained), ``random``
    (seeded init, no downloads), or a path to a saved state dict. Any
    failure to materialize weights raises ExtractorError.
    """
    try:
        ctor, pretrained = _BACKBONES[model_name]
    except KeyError:
        raise ExtractorError(
            f"unknown model {model_name!r}; choose from {available_models()}"
        ) from None

    if weights == "imagenet":
        try:
            model = ctor(weights=pretrained)
        except Exception as exc:
            raise ExtractorError(
                f"failed to load pretrained weights for {model_name}: {exc}"
            ) from exc
    elif weights == "random":
        model = ctor(weights=None)
        _seeded_reinit(model, seed)
    else:
        model = ctor(weights=None)
        path = Path(weights)
        if not path.is_file():
            raise ExtractorError(f"weights file not found: {path}")
        try:
            state = torch.load(path, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        except Exception as exc:
            raise ExtractorError(f"failed to load weights from {path}: {exc}") from exc

    model.eval()
    return model


def embed_batch(model: nn.Module, batch: torch.Tensor, layer: str) -> torch.Tensor:
    """Run one preprocessed batch through the model up to ``layer``.

    Returns a (batch, dim) float32 tensor on the CPU.
    """
    if layer not in LAYER_DIMS:
        raise ExtractorError(
            f"unknown layer {layer!r}; choose from {available_layers()}"
        )
    with torch.no_grad():
        feats = model.features(batch)
        if layer == "gap":
            return feats.mean(dim=(2, 3))
        pooled = torch.flatten(model.avgpool(feats), 1)
        if layer == "pool5":
            return pooled
        return model.classifier[: _FC_SLICE[layer]](pooled)
