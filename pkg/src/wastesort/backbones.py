"""Declarative registry of convolutional backbones.

Each entry records the canonical input size, the pixel normalization
published with the pretrained weights, and the pooled feature width.
Preprocessing and the classifier head both read from here so that no
stage ever guesses an input contract.

Heavy imports (torch, torchvision, timm) happen inside the builder
functions; importing this module stays cheap.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)


class UnknownBackbone(KeyError):
    """Backbone id has no registry entry."""


class WeightsUnavailable(RuntimeError):
    """Pretrained weights could not be fetched and no local cache exists."""


# ---------------------------------------------------------------------------
# Pixel normalizations. Functions map a float32 array scaled to [0, 1].

_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


@dataclass(frozen=True)
class Normalization:
    name: str
    apply: Callable[[np.ndarray], np.ndarray]
    value_range: tuple[float, float]


NORMALIZATIONS: dict[str, Normalization] = {
    "unit": Normalization("unit", lambda x: x, (0.0, 1.0)),
    "symmetric": Normalization("symmetric", lambda x: x * 2.0 - 1.0, (-1.0, 1.0)),
    "imagenet": Normalization(
        "imagenet",
        lambda x: (x - _IMAGENET_MEAN) / _IMAGENET_STD,
        (
            float(((0.0 - _IMAGENET_MEAN) / _IMAGENET_STD).min()),
            float(((1.0 - _IMAGENET_MEAN) / _IMAGENET_STD).max()),
        ),
    ),
}


def get_normalization(name: str) -> Normalization:
    try:
        return NORMALIZATIONS[name]
    except KeyError:
        raise UnknownBackbone(f"unknown normalization {name!r}") from None


# ---------------------------------------------------------------------------
# Registry


@dataclass(frozen=True)
class BackboneEntry:
    """One feature extractor: (N,3,H,W) in, pooled (N, feature_dim) out."""

    id: str
    input_size: tuple[int, int]  # (H, W)
    normalization: str
    feature_dim: int
    builder: Callable[[bool], "object"] = field(repr=False, compare=False, default=None)
    supports_pretrained: bool = True

    def __post_init__(self):
        if self.input_size[0] <= 0 or self.input_size[1] <= 0:
            raise ValueError(f"input_size must be positive, got {self.input_size}")
        if self.feature_dim <= 0:
            raise ValueError(f"feature_dim must be positive, got {self.feature_dim}")
        if self.normalization not in NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")


_REGISTRY: dict[str, BackboneEntry] = {}


def register_backbone(entry: BackboneEntry) -> None:
    _REGISTRY[entry.id] = entry


def unregister_backbone(backbone_id: str) -> None:
    _REGISTRY.pop(backbone_id, None)


def get_backbone_entry(backbone_id: str) -> BackboneEntry:
    try:
        return _REGISTRY[backbone_id]
    except KeyError:
        raise UnknownBackbone(
            f"unknown backbone {backbone_id!r}; registered: {sorted(_REGISTRY)}"
        ) from None


def registered_backbones() -> list[str]:
    return sorted(_REGISTRY)


def build_backbone(backbone_id: str, pretrained: bool = True):
    """Instantiate the feature extractor for a registry entry.

    Raises UnknownBackbone for unregistered ids and WeightsUnavailable when
    pretrained weights are requested but cannot be fetched or constructed.
    """
    entry = get_backbone_entry(backbone_id)
    if pretrained and not entry.supports_pretrained:
        raise WeightsUnavailable(f"backbone {backbone_id!r} has no published pretrained weights")
    try:
        return entry.builder(pretrained)
    except (UnknownBackbone, WeightsUnavailable):
        raise
    except Exception as exc:
        if pretrained:
            raise WeightsUnavailable(
                f"could not obtain pretrained weights for {backbone_id!r} "
                f"(no network and no cache?): {exc}"
            ) from exc
        raise


# ---------------------------------------------------------------------------
# Builders. Every builder returns an nn.Module mapping images to pooled
# feature vectors; global average pooling is part of the returned module.


def _build_torchvision(name: str, pretrained: bool):
    import torch.nn as nn
    import torchvision.models as tvm

    if name == "mobilenet_v2":
        weights = tvm.MobileNet_V2_Weights.IMAGENET1K_V1 if pretrained else None
        model = tvm.mobilenet_v2(weights=weights)
        model.classifier = nn.Identity()
    elif name == "resnet50":
        weights = tvm.ResNet50_Weights.IMAGENET1K_V1 if pretrained else None
        model = tvm.resnet50(weights=weights)
        model.fc = nn.Identity()
    elif name == "inception_v3":
        if pretrained:
            model = tvm.inception_v3(weights=tvm.Inception_V3_Weights.IMAGENET1K_V1)
        else:
            model = tvm.inception_v3(weights=None, aux_logits=False, init_weights=True)
        # the auxiliary head only exists for training the original net
        model.aux_logits = False
        model.AuxLogits = None
        model.fc = nn.Identity()
    else:  # pragma: no cover - registry and builder names are kept in sync
        raise UnknownBackbone(name)
    return model


def _build_timm(name: str, pretrained: bool):
    import timm

    return timm.create_model(name, pretrained=pretrained, num_classes=0)


def _build_tiny(pretrained: bool):
    if pretrained:
        raise WeightsUnavailable("tiny_cnn is a from-scratch toy backbone; no pretrained weights")
    import torch.nn as nn

    return nn.Sequential(
        nn.Conv2d(3, 16, 3, stride=2, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(16, 32, 3, stride=2, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(32, 64, 3, stride=2, padding=1),
        nn.ReLU(inplace=True),
        nn.AdaptiveAvgPool2d(1),
        nn.Flatten(1),
    )


# The six benchmarked architectures, in comparison-report order.
BENCHMARK_BACKBONES = (
    "mobilenet",
    "inception_v3",
    "inception_resnet_v2",
    "resnet50",
    "mobilenet_v2",
    "xception",
)

# Sizes and normalizations as published with the weights (torchvision:
# ImageNet mean/std; the TF-lineage nets: scale to [-1, 1]).
register_backbone(BackboneEntry(
    id="mobilenet", input_size=(224, 224), normalization="symmetric", feature_dim=1024,
    builder=lambda p: _build_timm("mobilenetv1_100", p),
))
register_backbone(BackboneEntry(
    id="inception_v3", input_size=(299, 299), normalization="imagenet", feature_dim=2048,
    builder=lambda p: _build_torchvision("inception_v3", p),
))
register_backbone(BackboneEntry(
    id="inception_resnet_v2", input_size=(299, 299), normalization="symmetric", feature_dim=1536,
    builder=lambda p: _build_timm("inception_resnet_v2", p),
))
register_backbone(BackboneEntry(
    id="resnet50", input_size=(224, 224), normalization="imagenet", feature_dim=2048,
    builder=lambda p: _build_torchvision("resnet50", p),
))
register_backbone(BackboneEntry(
    id="mobilenet_v2", input_size=(224, 224), normalization="imagenet", feature_dim=1280,
    builder=lambda p: _build_torchvision("mobilenet_v2", p),
))
register_backbone(BackboneEntry(
    id="xception", input_size=(299, 299), normalization="symmetric", feature_dim=2048,
    builder=lambda p: _build_timm("legacy_xception", p),
))

# Toy backbone for fast CPU smoke runs and demos. Not part of the benchmark
# set; it has no pretrained weights.
register_backbone(BackboneEntry(
    id="tiny_cnn", input_size=(64, 64), normalization="symmetric", feature_dim=64,
    builder=_build_tiny, supports_pretrained=False,
))
