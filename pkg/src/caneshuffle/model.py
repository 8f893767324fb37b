"""CaneShuffle classifier: graph construction, forward pass, and cost profiling.

The backbone is a v2-style channel-shuffle network: a conv stem, a 3x3/2
maxpool, three stages of shuffle blocks (each stage opens with a stride-2
downsample block), a final 1x1 conv, global average pooling, and a two-layer
MLP head. Dropout positions in the head are recorded in the config but are
identity at inference.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import tensorops as T
from .classes import NUM_CLASSES
from .errors import ConfigurationError, DimensionError


@dataclass(frozen=True)
class ModelConfig:
    input_size: int = 224
    stem_channels: int = 24
    stage_blocks: tuple[int, ...] = (4, 8, 4)
    stage_channels: tuple[int, ...] = (116, 232, 464)
    final_conv_channels: int = 1024
    head_hidden: int = 1024
    num_classes: int = NUM_CLASSES
    dropout1: float = 0.0
    dropout2: float = 0.0

    def __post_init__(self):
        if len(self.stage_blocks) != len(self.stage_channels):
            raise ConfigurationError("stage_blocks and stage_channels lengths differ")
        if any(c % 2 for c in self.stage_channels):
            raise ConfigurationError("stage channels must be even (blocks split them in half)")
        if self.num_classes < 2:
            raise ConfigurationError("num_classes must be >= 2")
        for name in ("dropout1", "dropout2"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")


class ConvBN:
    """Conv (no bias) followed by inference-mode BN, optionally ReLU."""

    def __init__(self, name: str, spec: T.ConvSpec, act: bool):
        self.name = name
        self.spec = spec
        self.act = act
        cin_g = spec.in_channels // spec.groups
        self.weight = np.zeros((spec.out_channels, cin_g, *spec.kernel), dtype=np.float32)
        c = spec.out_channels
        self.gamma = np.ones(c, dtype=np.float32)
        self.beta = np.zeros(c, dtype=np.float32)
        self.mean = np.zeros(c, dtype=np.float32)
        self.var = np.ones(c, dtype=np.float32)

    def init(self, rng: np.random.Generator):
        fan_in = self.weight[0].size
        bound = 1.0 / np.sqrt(fan_in)
        self.weight = rng.uniform(-bound, bound, self.weight.shape).astype(np.float32)

    def forward(self, x: np.ndarray) -> np.ndarray:
        y = T.conv2d(x, self.weight, self.spec)
        y = T.batchnorm_infer(y, self.mean, self.var, self.gamma, self.beta)
        return T.relu(y) if self.act else y

    def params(self) -> dict[str, np.ndarray]:
        return {
            f"{self.name}.conv.weight": self.weight,
            f"{self.name}.bn.gamma": self.gamma,
            f"{self.name}.bn.beta": self.beta,
            f"{self.name}.bn.mean": self.mean,
            f"{self.name}.bn.var": self.var,
        }

    def set_param(self, suffix: str, value: np.ndarray):
        attr = {"conv.weight": "weight", "bn.gamma": "gamma", "bn.beta": "beta",
                "bn.mean": "mean", "bn.var": "var"}[suffix]
        current = getattr(self, attr)
        if value.shape != current.shape:
            raise DimensionError(
                f"{self.name}.{suffix}: expected shape {current.shape}, got {value.shape}"
            )
        setattr(self, attr, np.ascontiguousarray(value, dtype=np.float32))

    def out_spatial(self, h: int, w: int) -> tuple[int, int]:
        s = self.spec
        hout = (h + 2 * s.padding[0] - s.kernel[0]) // s.stride[0] + 1
        wout = (w + 2 * s.padding[1] - s.kernel[1]) // s.stride[1] + 1
        return hout, wout

    def cost(self, h: int, w: int) -> tuple[int, int, int]:
        """(trainable params, buffer scalars, MACs) at input spatial size h x w."""
        s = self.spec
        hout, wout = self.out_spatial(h, w)
        conv_params = self.weight.size
        bn_affine = 2 * s.out_channels
        buffers = 2 * s.out_channels
        macs = s.out_channels * (s.in_channels // s.groups) * s.kernel[0] * s.kernel[1] * hout * wout
        return conv_params + bn_affine, buffers, macs


class Linear:
    def __init__(self, name: str, in_features: int, out_features: int):
        self.name = name
        self.weight = np.zeros((out_features, in_features), dtype=np.float32)
        self.bias = np.zeros(out_features, dtype=np.float32)

    def init(self, rng: np.random.Generator):
        bound = 1.0 / np.sqrt(self.weight.shape[1])
        self.weight = rng.uniform(-bound, bound, self.weight.shape).astype(np.float32)
        self.bias = rng.uniform(-bound, bound, self.bias.shape).astype(np.float32)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return T.linear(x, self.weight, self.bias)

    def params(self) -> dict[str, np.ndarray]:
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def set_param(self, suffix: str, value: np.ndarray):
        current = getattr(self, suffix)
        if value.shape != current.shape:
            raise DimensionError(
                f"{self.name}.{suffix}: expected shape {current.shape}, got {value.shape}"
            )
        setattr(self, suffix, np.ascontiguousarray(value, dtype=np.float32))

    def cost(self) -> tuple[int, int]:
        return self.weight.size + self.bias.size, self.weight.size


class ShuffleBlock:
    """One shuffle unit: channel split (regular) or dual-branch stride-2 (downsample)."""

    def __init__(self, name: str, in_channels: int, out_channels: int, downsample: bool):
        self.name = name
        self.downsample = downsample
        self.in_channels = in_channels
        self.out_channels = out_channels
        branch_ch = out_channels // 2
        if downsample:
            self.branch1 = [
                ConvBN(f"{name}.branch1.dw",
                       T.ConvSpec(in_channels, in_channels, (3, 3), (2, 2), (1, 1), in_channels),
                       act=False),
                ConvBN(f"{name}.branch1.pw",
                       T.ConvSpec(in_channels, branch_ch, (1, 1)), act=True),
            ]
            right_in = in_channels
        else:
            if in_channels != out_channels:
                raise ConfigurationError(
                    f"{name}: regular block needs in_channels == out_channels "
                    f"({in_channels} != {out_channels})"
                )
            if in_channels % 2:
                raise ConfigurationError(f"{name}: regular block needs an even channel count")
            self.branch1 = []
            right_in = in_channels // 2
        stride = (2, 2) if downsample else (1, 1)
        self.branch2 = [
            ConvBN(f"{name}.branch2.pw1", T.ConvSpec(right_in, branch_ch, (1, 1)), act=True),
            ConvBN(f"{name}.branch2.dw",
                   T.ConvSpec(branch_ch, branch_ch, (3, 3), stride, (1, 1), branch_ch),
                   act=False),
            ConvBN(f"{name}.branch2.pw2", T.ConvSpec(branch_ch, branch_ch, (1, 1)), act=True),
        ]

    def layers(self) -> list[ConvBN]:
        return [*self.branch1, *self.branch2]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.downsample:
            left = x
            for layer in self.branch1:
                left = layer.forward(left)
            right = x
        else:
            half = self.in_channels // 2
            left, right = x[:, :half], x[:, half:]
        for layer in self.branch2:
            right = layer.forward(right)
        return T.channel_shuffle(np.concatenate([left, right], axis=1), 2)


@dataclass
class LayerCost:
    name: str
    params: int
    buffers: int
    macs: int


@dataclass
class CostReport:
    layers: list[LayerCost] = field(default_factory=list)
    model_file_bytes: int | None = None

    @property
    def total_params(self) -> int:
        return sum(l.params for l in self.layers)

    @property
    def total_buffers(self) -> int:
        return sum(l.buffers for l in self.layers)

    @property
    def total_macs(self) -> int:
        return sum(l.macs for l in self.layers)

    def to_dict(self) -> dict:
        return {
            "layers": [vars(l) for l in self.layers],
            "total_params": self.total_params,
            "total_buffers": self.total_buffers,
            "total_macs": self.total_macs,
            "model_file_bytes": self.model_file_bytes,
        }


class ModelGraph:
    """Fully constructed classifier with named parameters."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.stem = ConvBN("stem", T.ConvSpec(3, config.stem_channels, (3, 3), (2, 2), (1, 1)),
                           act=True)
        self.stages: list[list[ShuffleBlock]] = []
        cin = config.stem_channels
        for si, (nblocks, cout) in enumerate(zip(config.stage_blocks, config.stage_channels)):
            blocks = []
            for bi in range(nblocks):
                down = bi == 0
                blocks.append(ShuffleBlock(f"stage{si + 2}.block{bi}",
                                           cin if down else cout, cout, down))
                cin = cout
            self.stages.append(blocks)
        self.conv5 = ConvBN("conv5", T.ConvSpec(cin, config.final_conv_channels, (1, 1)), act=True)
        self.fc1 = Linear("head.fc1", config.final_conv_channels, config.head_hidden)
        self.fc2 = Linear("head.fc2", config.head_hidden, config.num_classes)

    # -- structure ---------------------------------------------------------

    def conv_layers(self) -> list[ConvBN]:
        layers = [self.stem]
        for stage in self.stages:
            for block in stage:
                layers.extend(block.layers())
        layers.append(self.conv5)
        return layers

    def parameters(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for layer in self.conv_layers():
            out.update(layer.params())
        out.update(self.fc1.params())
        out.update(self.fc2.params())
        return out

    def set_parameter(self, name: str, value: np.ndarray):
        by_name = {l.name: l for l in self.conv_layers()}
        by_name[self.fc1.name] = self.fc1
        by_name[self.fc2.name] = self.fc2
        for prefix in sorted(by_name, key=len, reverse=True):
            if name.startswith(prefix + "."):
                by_name[prefix].set_param(name[len(prefix) + 1:], value)
                return
        raise KeyError(name)

    # -- forward -----------------------------------------------------------

    def features(self, batch: np.ndarray) -> np.ndarray:
        """Post-ReLU output of the final 1x1 conv, (N, final_conv_channels, H', W')."""
        batch = np.asarray(batch, dtype=np.float32)
        expect = (3, self.config.input_size, self.config.input_size)
        if batch.ndim != 4 or batch.shape[1:] != expect:
            raise DimensionError(
                f"input axes: expected (N, {expect[0]}, {expect[1]}, {expect[2]}), "
                f"got {batch.shape}"
            )
        x = self.stem.forward(batch)
        x = T.maxpool2d(x)
        for stage in self.stages:
            for block in stage:
                x = block.forward(x)
        return self.conv5.forward(x)

    def head(self, pooled: np.ndarray) -> np.ndarray:
        """Logits from the (N, C) pooled embedding; dropout is identity here."""
        h = T.relu(self.fc1.forward(pooled))
        return self.fc2.forward(h)

    def embed(self, batch: np.ndarray) -> np.ndarray:
        """Penultimate (GAP) embedding, (N, final_conv_channels)."""
        feat = self.features(batch)
        return T.global_avg_pool(feat)[:, :, 0, 0]

    def forward(self, batch: np.ndarray) -> np.ndarray:
        return self.head(self.embed(batch))

    # -- profiling ---------------------------------------------------------

    def cost_report(self, model_file_bytes: int | None = None) -> CostReport:
        report = CostReport(model_file_bytes=model_file_bytes)

        def chain(layers, h, w):
            """Cost a sequential branch, returning its output spatial size."""
            for layer in layers:
                p, b, m = layer.cost(h, w)
                report.layers.append(LayerCost(layer.name, p, b, m))
                h, w = layer.out_spatial(h, w)
            return h, w

        h = w = self.config.input_size
        h, w = chain([self.stem], h, w)
        # stem maxpool: 3x3 stride 2 pad 1, zero params/MACs
        h = (h + 2 - 3) // 2 + 1
        w = (w + 2 - 3) // 2 + 1
        for stage in self.stages:
            for block in stage:
                hout, wout = chain(block.branch2, h, w)
                if block.downsample:
                    chain(block.branch1, h, w)
                h, w = hout, wout
        h, w = chain([self.conv5], h, w)
        for lin in (self.fc1, self.fc2):
            p, m = lin.cost()
            report.layers.append(LayerCost(lin.name, p, 0, m))
        return report


def build_model(config: ModelConfig | None = None, seed: int = 0) -> ModelGraph:
    """Construct the graph with seeded uniform(+-1/sqrt(fan_in)) initialization."""
    config = config or ModelConfig()
    model = ModelGraph(config)
    rng = np.random.default_rng(seed)
    for layer in model.conv_layers():
        layer.init(rng)
    model.fc1.init(rng)
    model.fc2.init(rng)
    return model


def export_embeddings(model: ModelGraph, images, class_names, preprocess, log=None) -> str:
    """CSV export of penultimate embeddings (one row per readable image).

    `images` is an iterable of (image_id, path-or-PIL-image); unreadable entries
    are skipped with a logged reason.
    """
    width = model.config.final_conv_channels
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["image_id", "label", *[f"f{i}" for i in range(width)]])
    for image_id, image in images:
        try:
            x = preprocess(image)
        except Exception as exc:  # unreadable input: skip the row, keep going
            if log is not None:
                log(f"skipping {image_id}: {exc}")
            continue
        emb = model.embed(x)[0]
        logits = model.head(emb[None, :])[0]
        label = class_names[int(np.argmax(logits))]
        writer.writerow([image_id, label, *[repr(float(v)) for v in emb]])
    return buf.getvalue()
