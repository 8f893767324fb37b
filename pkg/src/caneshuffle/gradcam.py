"""Grad-CAM at the final conv feature map, via analytic head gradients.

The head is GAP -> linear -> ReLU -> linear, so the gradient of a class logit
with respect to the feature map has a closed form; no autodiff is needed.
The ReLU subgradient at exactly zero is taken as zero.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import tensorops as T
from .errors import CaneError

COLD = np.array([0.0, 0.0, 255.0])  # blue
HOT = np.array([255.0, 0.0, 0.0])   # red
OVERLAY_ALPHA = 0.5


@dataclass
class CamResult:
    target_class: int
    alphas: np.ndarray          # (C,) channel weights
    raw_map: np.ndarray         # (H', W'), >= 0
    normalized_map: np.ndarray  # (H', W') in [0, 1]
    overlay_png: bytes          # 224x224 RGBA PNG


def head_gradient(model, activations: np.ndarray, target_class: int) -> np.ndarray:
    """d logit[target_class] / d activations, for post-ReLU features (C, H', W').

    Spatially constant per channel because the head sees only the GAP mean:
    grad[k, i, j] = (1 / H'W') * sum_h W2[c, h] * 1[z_h > 0] * W1[h, k].
    """
    a = np.asarray(activations, dtype=np.float32)
    if a.ndim != 3:
        raise CaneError(f"activations must be (C, H', W'), got rank {a.ndim}")
    c, h, w = a.shape
    if not 0 <= target_class < model.config.num_classes:
        raise CaneError(
            f"class index {target_class} out of range [0, {model.config.num_classes})"
        )
    pooled = a.mean(axis=(1, 2), dtype=np.float64).astype(np.float32)
    z = model.fc1.forward(pooled[None, :])[0]
    mask = (z > 0).astype(np.float64)
    # (1/HW) * W1^T @ (W2[c] * mask), one value per feature channel
    per_channel = (model.fc1.weight.astype(np.float64).T
                   @ (model.fc2.weight[target_class].astype(np.float64) * mask)) / (h * w)
    return np.broadcast_to(per_channel[:, None, None].astype(np.float32), (c, h, w)).copy()


def gradcam_map(model, image: np.ndarray, target_class: int | None = None,
                class_names=None) -> CamResult:
    """Full Grad-CAM result for a preprocessed (1, 3, S, S) input.

    `image` must be the normalized model input; the overlay is rendered against
    the de-normalized version of the same pixels.
    """
    feats = model.features(image)[0]
    pooled = feats.mean(axis=(1, 2), dtype=np.float64).astype(np.float32)[None, :]
    logits = model.head(pooled)[0]
    if target_class is None:
        target_class = int(np.argmax(logits))

    grad = head_gradient(model, feats, target_class)
    alphas = grad.mean(axis=(1, 2))
    raw = np.maximum(np.tensordot(alphas, feats, axes=(0, 0)), 0.0).astype(np.float32)
    normalized = normalize_map(raw)

    size = model.config.input_size
    up = T.bilinear_resize(normalized[None, None, :, :], size, size)[0, 0]
    rgb = _denormalize_input(image[0])
    png = overlay(up, rgb)
    return CamResult(target_class, alphas, raw, normalized, png)


def normalize_map(raw: np.ndarray) -> np.ndarray:
    """Min-max to [0, 1]; a constant map normalizes to all zeros."""
    lo, hi = float(raw.min()), float(raw.max())
    if hi - lo <= 0.0:
        return np.zeros_like(raw, dtype=np.float32)
    return ((raw - lo) / (hi - lo)).astype(np.float32)


def overlay(normalized_map: np.ndarray, image_rgb: np.ndarray) -> bytes:
    """Blend a blue->red heatmap over an RGB uint8 image; returns RGBA PNG bytes."""
    v = np.clip(np.asarray(normalized_map, dtype=np.float64), 0.0, 1.0)[:, :, None]
    heat = COLD * (1.0 - v) + HOT * v
    base = np.asarray(image_rgb, dtype=np.float64)
    blended = (1.0 - OVERLAY_ALPHA) * base + OVERLAY_ALPHA * heat
    rgba = np.concatenate(
        [np.clip(np.rint(blended), 0, 255),
         np.full((*v.shape[:2], 1), 255.0)],
        axis=2,
    ).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(rgba, mode="RGBA").save(buf, format="PNG")
    return buf.getvalue()


def _denormalize_input(x: np.ndarray) -> np.ndarray:
    """Invert the preprocessing normalization to get uint8 RGB pixels."""
    from .curation import NORM_MEAN, NORM_STD

    mean = np.asarray(NORM_MEAN)[:, None, None]
    std = np.asarray(NORM_STD)[:, None, None]
    rgb = (np.asarray(x, dtype=np.float64) * std + mean) * 255.0
    return np.clip(np.rint(rgb), 0, 255).astype(np.uint8).transpose(1, 2, 0)
