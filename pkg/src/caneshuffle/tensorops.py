"""Dense NCHW tensor kernels for the classifier's forward pass.

Tensors are plain float32 numpy arrays in (batch, channels, height, width)
layout. All ops are pure functions: they never mutate their inputs, so a
loaded model can be shared freely across threads.

Conventions fixed here (and relied on by the golden tests):
  - conv2d is cross-correlation (no kernel flip) with zero padding and no bias
  - maxpool pads with -inf
  - bilinear_resize aligns half-pixel centers
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class ConvSpec:
    """Shape/stride/grouping description of a 2-D convolution."""

    in_channels: int
    out_channels: int
    kernel: tuple[int, int]
    stride: tuple[int, int] = (1, 1)
    padding: tuple[int, int] = (0, 0)
    groups: int = 1

    def __post_init__(self):
        if self.in_channels <= 0 or self.out_channels <= 0:
            raise ConfigurationError("channel counts must be positive")
        if self.groups <= 0:
            raise ConfigurationError("groups must be positive")
        if self.in_channels % self.groups or self.out_channels % self.groups:
            raise ConfigurationError(
                f"groups={self.groups} must divide in_channels={self.in_channels} "
                f"and out_channels={self.out_channels}"
            )
        if min(self.kernel) < 1 or min(self.stride) < 1:
            raise ConfigurationError("kernel and stride extents must be >= 1")


def _as_f32(x) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float32)


def _require_nchw(x: np.ndarray, name: str = "input") -> np.ndarray:
    if x.ndim != 4:
        raise DimensionError(f"{name} must be rank-4 NCHW, got rank {x.ndim}")
    return x


def _window_view(x: np.ndarray, kh: int, kw: int, sh: int, sw: int) -> np.ndarray:
    """Sliding (N, C, Hout, Wout, kh, kw) view of a padded NCHW array."""
    n, c, h, w = x.shape
    hout = (h - kh) // sh + 1
    wout = (w - kw) // sw + 1
    ns, cs, hs, ws = x.strides
    return np.lib.stride_tricks.as_strided(
        x,
        shape=(n, c, hout, wout, kh, kw),
        strides=(ns, cs, hs * sh, ws * sw, hs, ws),
        writeable=False,
    )


def conv2d(x: np.ndarray, weights: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Grouped 2-D cross-correlation with zero padding and no bias.

    weights shape: (out_channels, in_channels/groups, kh, kw).
    Output spatial extents follow floor((H + 2p - k) / s) + 1.
    """
    x = _require_nchw(_as_f32(x))
    weights = _as_f32(weights)
    kh, kw = spec.kernel
    sh, sw = spec.stride
    ph, pw = spec.padding
    cin_g = spec.in_channels // spec.groups
    cout_g = spec.out_channels // spec.groups

    if x.shape[1] != spec.in_channels:
        raise DimensionError(
            f"channel axis: input has {x.shape[1]} channels, spec expects {spec.in_channels}"
        )
    if weights.shape != (spec.out_channels, cin_g, kh, kw):
        raise DimensionError(
            f"weight axes: expected {(spec.out_channels, cin_g, kh, kw)}, got {weights.shape}"
        )

    n, _, h, w = x.shape
    hout = (h + 2 * ph - kh) // sh + 1
    wout = (w + 2 * pw - kw) // sw + 1
    if hout < 1 or wout < 1:
        raise DimensionError(
            f"spatial axes: kernel {spec.kernel} does not fit input {h}x{w} with padding {spec.padding}"
        )

    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))

    # Depthwise fast path: one filter per channel, no cross-channel sum.
    if spec.groups == spec.in_channels == spec.out_channels:
        win = _window_view(x, kh, kw, sh, sw)
        return np.einsum("nchwij,cij->nchw", win, weights[:, 0], optimize=True).astype(np.float32)

    # 1x1 stride-1 fast path: pure channel mixing.
    if (kh, kw) == (1, 1) and (sh, sw) == (1, 1) and spec.groups == 1:
        out = np.einsum("oc,nchw->nohw", weights[:, :, 0, 0], x, optimize=True)
        return out.astype(np.float32)

    win = _window_view(x, kh, kw, sh, sw)
    out = np.empty((n, spec.out_channels, hout, wout), dtype=np.float32)
    for g in range(spec.groups):
        wg = weights[g * cout_g : (g + 1) * cout_g]
        xg = win[:, g * cin_g : (g + 1) * cin_g]
        out[:, g * cout_g : (g + 1) * cout_g] = np.einsum(
            "nchwij,ocij->nohw", xg, wg, optimize=True
        )
    return out


def batchnorm_infer(
    x: np.ndarray,
    mean: np.ndarray,
    var: np.ndarray,
    gamma: np.ndarray,
    beta: np.ndarray,
    eps: float = 1e-5,
) -> np.ndarray:
    """Inference-mode batch normalization: gamma*(x-mean)/sqrt(var+eps) + beta."""
    x = _require_nchw(_as_f32(x))
    c = x.shape[1]
    for name, v in (("mean", mean), ("var", var), ("gamma", gamma), ("beta", beta)):
        v = np.asarray(v)
        if v.shape != (c,):
            raise DimensionError(
                f"channel axis: {name} has length {v.shape}, input has {c} channels"
            )
    mean, var, gamma, beta = (np.asarray(v, dtype=np.float32) for v in (mean, var, gamma, beta))
    scale = gamma / np.sqrt(var + np.float32(eps))
    shift = beta - mean * scale
    return (x * scale[None, :, None, None] + shift[None, :, None, None]).astype(np.float32)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(_as_f32(x), np.float32(0.0))


def maxpool2d(
    x: np.ndarray,
    kernel: tuple[int, int] = (3, 3),
    stride: tuple[int, int] = (2, 2),
    padding: tuple[int, int] = (1, 1),
) -> np.ndarray:
    """Sliding-window maximum with -inf padding semantics."""
    x = _require_nchw(_as_f32(x))
    kh, kw = kernel
    sh, sw = stride
    ph, pw = padding
    if ph or pw:
        x = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)), constant_values=-np.inf)
    win = _window_view(x, kh, kw, sh, sw)
    return win.max(axis=(4, 5)).astype(np.float32)


def channel_shuffle(x: np.ndarray, groups: int) -> np.ndarray:
    """Interleave channels across groups: index g*(C/g)+k moves to k*groups+g."""
    x = _require_nchw(_as_f32(x))
    n, c, h, w = x.shape
    if groups <= 0 or c % groups:
        raise ConfigurationError(f"groups={groups} must divide channel count {c}")
    return (
        x.reshape(n, groups, c // groups, h, w)
        .transpose(0, 2, 1, 3, 4)
        .reshape(n, c, h, w)
        .copy()
    )


def global_avg_pool(x: np.ndarray) -> np.ndarray:
    """Spatial mean, (N,C,H,W) -> (N,C,1,1)."""
    x = _require_nchw(_as_f32(x))
    return x.mean(axis=(2, 3), keepdims=True, dtype=np.float64).astype(np.float32)


def linear(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map y = x @ W.T + b with x:(N,F), W:(O,F), b:(O,)."""
    x = _as_f32(x)
    weights = _as_f32(weights)
    bias = _as_f32(bias)
    if x.ndim != 2:
        raise DimensionError(f"input must be rank-2 (N,F), got rank {x.ndim}")
    if weights.ndim != 2 or weights.shape[1] != x.shape[1]:
        raise DimensionError(
            f"feature axis: input has {x.shape[1]} features, weights expect {weights.shape}"
        )
    if bias.shape != (weights.shape[0],):
        raise DimensionError(
            f"output axis: bias has shape {bias.shape}, weights produce {weights.shape[0]}"
        )
    return (x @ weights.T + bias).astype(np.float32)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Stable softmax over the last axis (max-subtraction)."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    # float64 on purpose: float32 underflows to exact 0 for spread-out logits
    return e / e.sum(axis=-1, keepdims=True)


def bilinear_resize(x: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear interpolation with half-pixel-center alignment."""
    x = _require_nchw(_as_f32(x))
    if out_h < 1 or out_w < 1:
        raise ConfigurationError("target extents must be >= 1")
    n, c, h, w = x.shape
    if (out_h, out_w) == (h, w):
        return x.copy()

    def axis_coords(out_len, in_len):
        src = (np.arange(out_len, dtype=np.float64) + 0.5) * (in_len / out_len) - 0.5
        src = np.clip(src, 0.0, in_len - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, in_len - 1)
        frac = src - lo
        return lo, hi, frac

    y0, y1, fy = axis_coords(out_h, h)
    x0, x1, fx = axis_coords(out_w, w)
    fy = fy[:, None]
    fx = fx[None, :]

    top = x[:, :, y0][:, :, :, x0] * (1 - fx) + x[:, :, y0][:, :, :, x1] * fx
    bot = x[:, :, y1][:, :, :, x0] * (1 - fx) + x[:, :, y1][:, :, :, x1] * fx
    return (top * (1 - fy) + bot * fy).astype(np.float32)
