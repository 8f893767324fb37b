"""Bit-exact on-disk weight container.

Layout:
    magic   4 bytes          b"CNEW"
    version u32 little-endian (currently 1)
    hlen    u64 little-endian, byte length of the JSON header
    header  UTF-8 JSON: {"entries": [{name, dtype, shape, offset, byte_length}]}
    payload raw little-endian float32, offsets relative to payload start

Entries are sorted by name and offsets assigned in that order, so saving the
same parameters always produces byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct

import numpy as np

from .errors import FormatError, IncompleteContainerError

MAGIC = b"CNEW"
VERSION = 1

log = logging.getLogger(__name__)


def save_tensors(params: dict[str, np.ndarray]) -> bytes:
    entries = []
    payload = bytearray()
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype="<f4")
        entries.append({
            "name": name,
            "dtype": "f32",
            "shape": list(arr.shape),
            "offset": len(payload),
            "byte_length": arr.nbytes,
        })
        payload += arr.tobytes()
    header = json.dumps({"entries": entries}, separators=(",", ":"), sort_keys=True).encode()
    return MAGIC + struct.pack("<I", VERSION) + struct.pack("<Q", len(header)) + header + bytes(payload)


def load_tensors(data: bytes) -> dict[str, np.ndarray]:
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic bytes {data[:4]!r}, expected {MAGIC!r}")
    if len(data) < 16:
        raise FormatError("container truncated before header length")
    (version,) = struct.unpack_from("<I", data, 4)
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    (hlen,) = struct.unpack_from("<Q", data, 8)
    header_end = 16 + hlen
    if len(data) < header_end:
        raise FormatError("container truncated inside header")
    try:
        header = json.loads(data[16:header_end].decode("utf-8"))
        entries = header["entries"]
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed header JSON: {exc}") from exc

    payload = data[header_end:]
    tensors: dict[str, np.ndarray] = {}
    prev_end = 0
    for entry in entries:
        name = entry.get("name")
        shape = tuple(entry.get("shape", ()))
        offset = entry.get("offset")
        blen = entry.get("byte_length")
        if entry.get("dtype") != "f32":
            raise FormatError(f"tensor {name}: unsupported dtype {entry.get('dtype')!r}")
        expected = 4 * int(np.prod(shape, dtype=np.int64))
        if blen != expected:
            raise FormatError(
                f"tensor {name}: byte_length {blen} inconsistent with shape {list(shape)}"
            )
        if offset < prev_end:
            raise FormatError(f"tensor {name}: offset {offset} overlaps the previous entry")
        prev_end = offset + blen
        if prev_end > len(payload):
            raise FormatError(f"tensor {name}: payload truncated")
        if name in tensors:
            raise FormatError(f"tensor {name}: duplicate entry")
        tensors[name] = np.frombuffer(payload, dtype="<f4", count=blen // 4,
                                      offset=offset).reshape(shape).copy()
    return tensors


def container_checksum(data: bytes) -> str:
    return hashlib.md5(data).hexdigest()


def save_weights(model) -> bytes:
    """Serialize every model parameter (including BN running stats)."""
    return save_tensors(model.parameters())


def load_weights(data: bytes, config=None):
    """Rebuild a ModelGraph from container bytes.

    Unknown trailing tensors are logged as a warning, not an error; missing
    required tensors raise IncompleteContainerError listing them.
    """
    from .model import ModelConfig, ModelGraph

    model = ModelGraph(config or ModelConfig())
    required = set(model.parameters())
    tensors = load_tensors(data)
    missing = required - set(tensors)
    if missing:
        raise IncompleteContainerError(missing)
    extra = set(tensors) - required
    if extra:
        log.warning("ignoring %d unknown tensors: %s", len(extra), ", ".join(sorted(extra)[:5]))
    for name in required:
        model.set_parameter(name, tensors[name])
    return model
