"""Checkpoint-name to container-name mapping.

Conv and linear weights keep their names; BatchNorm tensors are renamed:
weight -> gamma, bias -> beta, running_mean -> mean, running_var -> var.
num_batches_tracked has no container counterpart and is dropped.
"""

from __future__ import annotations

from caneshuffle.model import ModelConfig, ModelGraph

_BN_SUFFIXES = {
    ".bn.weight": ".bn.gamma",
    ".bn.bias": ".bn.beta",
    ".bn.running_mean": ".bn.mean",
    ".bn.running_var": ".bn.var",
}

IGNORED_SUFFIX = ".num_batches_tracked"


def checkpoint_to_container(name: str) -> str | None:
    """Container name for one checkpoint key, or None if the key is ignored."""
    if name.endswith(IGNORED_SUFFIX):
        return None
    for src, dst in _BN_SUFFIXES.items():
        if name.endswith(src):
            return name[: -len(src)] + dst
    return name


def required_tensors(config: ModelConfig | None = None) -> dict[str, tuple[int, ...]]:
    """Container tensor name -> shape for a given architecture config."""
    graph = ModelGraph(config or ModelConfig())
    return {name: arr.shape for name, arr in graph.parameters().items()}


def build_name_map(state_dict_keys, config: ModelConfig | None = None) -> dict[str, str]:
    """Bijective checkpoint-key -> container-name map covering all required names.

    Raises KeyError listing the missing container names if the checkpoint does
    not cover the architecture.
    """
    required = set(required_tensors(config))
    mapping: dict[str, str] = {}
    for key in state_dict_keys:
        target = checkpoint_to_container(key)
        if target is not None and target in required:
            mapping[key] = target
    missing = sorted(required - set(mapping.values()))
    if missing:
        raise KeyError(missing)
    return mapping
