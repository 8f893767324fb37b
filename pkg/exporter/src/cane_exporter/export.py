"""Export a torch checkpoint to the container format and verify parity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch

from caneshuffle.model import ModelConfig
from caneshuffle.weights import load_weights, save_tensors

from .namemap import build_name_map, required_tensors
from .reference import CaneShuffleNet

PARITY_THRESHOLD = 1e-4


class ExportError(Exception):
    """Checkpoint does not cover the architecture (missing/mismatched tensors)."""

    def __init__(self, missing: list[str], mismatched: list[str]):
        self.missing = missing
        self.mismatched = mismatched
        parts = []
        if missing:
            parts.append("missing tensors: " + ", ".join(missing))
        if mismatched:
            parts.append("shape mismatches: " + ", ".join(mismatched))
        super().__init__("; ".join(parts))


def load_checkpoint(path) -> dict[str, torch.Tensor]:
    state = torch.load(path, map_location="cpu", weights_only=True)
    if isinstance(state, dict) and "state_dict" in state:
        state = state["state_dict"]
    return state


def export_state_dict(state: dict[str, torch.Tensor],
                      config: ModelConfig | None = None) -> bytes:
    """Container bytes from a checkpoint state_dict."""
    required = required_tensors(config)
    try:
        mapping = build_name_map(state.keys(), config)
    except KeyError as exc:
        raise ExportError(missing=exc.args[0], mismatched=[]) from exc

    tensors: dict[str, np.ndarray] = {}
    mismatched = []
    for src, dst in mapping.items():
        arr = state[src].detach().cpu().numpy().astype(np.float32)
        if arr.shape != tuple(required[dst]):
            mismatched.append(f"{dst} (checkpoint {arr.shape}, "
                              f"architecture {tuple(required[dst])})")
            continue
        tensors[dst] = arr
    if mismatched:
        raise ExportError(missing=[], mismatched=sorted(mismatched))
    return save_tensors(tensors)


def export_checkpoint(checkpoint_path, out_path,
                      config: ModelConfig | None = None) -> int:
    data = export_state_dict(load_checkpoint(checkpoint_path), config)
    with open(out_path, "wb") as fh:
        fh.write(data)
    return len(data)


@dataclass
class ParityReport:
    comparisons: int
    max_abs_diff: float
    threshold: float = PARITY_THRESHOLD
    per_input: list[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.comparisons > 0 and self.max_abs_diff <= self.threshold

    @property
    def flagged(self) -> bool:
        return self.comparisons == 0

    def to_dict(self) -> dict:
        return {
            "comparisons": self.comparisons,
            "max_abs_diff": self.max_abs_diff,
            "threshold": self.threshold,
            "per_input": self.per_input,
            "passed": self.passed,
            "flagged_no_comparisons": self.flagged,
        }


def verify_parity(state: dict[str, torch.Tensor], container: bytes,
                  n_inputs: int = 10, seed: int = 0,
                  config: ModelConfig | None = None) -> ParityReport:
    """Max absolute logit difference torch-vs-container over n random inputs."""
    config = config or ModelConfig()
    net = CaneShuffleNet(config)
    net.load_state_dict(state, strict=False)
    net.eval()
    model = load_weights(container, config)

    rng = np.random.default_rng(seed)
    diffs = []
    size = config.input_size
    with torch.no_grad():
        for _ in range(n_inputs):
            x = rng.standard_normal((1, 3, size, size)).astype(np.float32)
            ref = net(torch.from_numpy(x)).numpy()
            got = model.forward(x)
            diffs.append(float(np.abs(ref - got).max()))
    return ParityReport(
        comparisons=len(diffs),
        max_abs_diff=max(diffs) if diffs else float("nan"),
        per_input=diffs,
    )
