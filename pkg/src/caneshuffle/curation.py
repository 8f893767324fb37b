"""Corpus curation: dedup, renaming, splitting, augmentation planning, preprocessing.

Near-duplicate detection uses a 64-bit difference hash (dHash) with a Hamming
threshold of 5 and a greedy lexicographic scan, so results are reproducible
regardless of filesystem enumeration order.
"""

from __future__ import annotations

import hashlib
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import tensorops as T
from .errors import CaneError, FormatError

NEAR_DUP_THRESHOLD = 5
TRAIN_FRACTION = 0.8

# ImageNet channel statistics used by the pretrained backbone family
NORM_MEAN = (0.485, 0.456, 0.406)
NORM_STD = (0.229, 0.224, 0.225)

# Augmentation factor by original (post-dedup) class size
AUGMENT_TIERS = [(100, 6), (200, 4), (250, 3), (400, 2), (500, 1)]

AUGMENT_OPS = ("hflip", "vflip", "rotate", "brightness", "contrast", "crop")


# ---------------------------------------------------------------------------
# hashing

def hash_exact(data: bytes) -> str:
    """MD5 hex digest of the raw file bytes."""
    return hashlib.md5(data).hexdigest()


def _to_image(image) -> Image.Image:
    if isinstance(image, Image.Image):
        return image
    try:
        if isinstance(image, (bytes, bytearray)):
            return Image.open(io.BytesIO(image))
        return Image.open(image)
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise FormatError(f"cannot decode image: {exc}") from exc


def phash64(image) -> int:
    """64-bit dHash: 9x8 grayscale, bit set where pixel[x] > pixel[x+1]."""
    img = _to_image(image).convert("RGB")
    arr = np.asarray(img, dtype=np.float32)
    gray = arr @ np.array([0.299, 0.587, 0.114], dtype=np.float32)
    small = T.bilinear_resize(gray[None, None, :, :], 8, 9)[0, 0]
    bits = (small[:, :-1] > small[:, 1:]).flatten()
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def hamming(a: int, b: int) -> int:
    return (a ^ b).bit_count()


# ---------------------------------------------------------------------------
# dedup

@dataclass
class CorpusEntry:
    path: str
    label: str
    digest: str
    phash: int
    role: str = "train"          # train | test | removed(exact) | removed(near)
    matched: str | None = None   # surviving canonical entry, for removed rows


def dedup(entries: list[CorpusEntry]) -> tuple[list[CorpusEntry], list[CorpusEntry]]:
    """Two-pass duplicate removal; returns (survivors, removals).

    Pass 1 drops exact byte duplicates, keeping the lexicographically smallest
    path. Pass 2 scans survivors in lexicographic order and drops any image
    within Hamming distance 5 of an earlier kept image.
    """
    ordered = sorted(entries, key=lambda e: e.path)
    survivors: list[CorpusEntry] = []
    removals: list[CorpusEntry] = []

    seen_digest: dict[str, CorpusEntry] = {}
    near_candidates: list[CorpusEntry] = []
    for e in ordered:
        keeper = seen_digest.get(e.digest)
        if keeper is not None:
            e.role = "removed(exact)"
            e.matched = keeper.path
            removals.append(e)
        else:
            seen_digest[e.digest] = e
            near_candidates.append(e)

    for e in near_candidates:
        match = next((k for k in survivors if hamming(k.phash, e.phash) <= NEAR_DUP_THRESHOLD),
                     None)
        if match is not None:
            e.role = "removed(near)"
            e.matched = match.path
            removals.append(e)
        else:
            survivors.append(e)
    return survivors, removals


# ---------------------------------------------------------------------------
# renaming

def canonical_stem(label: str) -> str:
    return "".join(ch for ch in label if ch.isalnum())


def rename_normalize(survivors: list[CorpusEntry]) -> dict[str, str]:
    """Map original path -> ClassName_NNNN.jpg, ordered by original path per class."""
    mapping: dict[str, str] = {}
    used: set[str] = set()
    by_label: dict[str, list[CorpusEntry]] = {}
    for e in survivors:
        by_label.setdefault(e.label, []).append(e)
    for label in sorted(by_label):
        for i, e in enumerate(sorted(by_label[label], key=lambda x: x.path), start=1):
            new = f"{canonical_stem(label)}_{i:04d}.jpg"
            if new in used:
                raise CaneError(f"rename collision on {new}")
            used.add(new)
            mapping[e.path] = new
    return mapping


# ---------------------------------------------------------------------------
# split and augmentation plan

@dataclass
class PlanRow:
    label: str
    original: int
    train: int
    test: int
    factor: int
    final: int


@dataclass
class CurationPlan:
    rows: list[PlanRow] = field(default_factory=list)

    @property
    def original_ratio(self) -> float:
        counts = [r.original for r in self.rows]
        return max(counts) / min(counts)

    @property
    def final_ratio(self) -> float:
        finals = [r.final for r in self.rows]
        return max(finals) / min(finals)

    def to_dict(self) -> dict:
        return {
            "rows": [vars(r) for r in self.rows],
            "original_imbalance_ratio": self.original_ratio,
            "final_imbalance_ratio": self.final_ratio,
        }


def split_counts(n: int) -> tuple[int, int]:
    train = math.floor(TRAIN_FRACTION * n)
    return train, n - train


def stratified_split(labels: list[str], seed: int = 0) -> dict[str, tuple[list[int], list[int]]]:
    """Per-class (train indices, test indices) via seeded in-class shuffle."""
    by_label: dict[str, list[int]] = {}
    for i, lab in enumerate(labels):
        by_label.setdefault(lab, []).append(i)
    out = {}
    for lab in sorted(by_label):
        idx = list(by_label[lab])
        lab_key = int.from_bytes(hashlib.sha256(lab.encode()).digest()[:4], "little")
        rng = np.random.default_rng([seed, lab_key])
        rng.shuffle(idx)
        ntrain, _ = split_counts(len(idx))
        out[lab] = (sorted(idx[:ntrain]), sorted(idx[ntrain:]))
    return out


def augmentation_factor(original: int) -> int:
    for bound, factor in AUGMENT_TIERS:
        if original < bound:
            return factor
    return 0


def augmentation_plan(class_counts: dict[str, int]) -> CurationPlan:
    """Tiered plan from post-dedup per-class counts: final = train * (1 + factor)."""
    plan = CurationPlan()
    for label, n in class_counts.items():
        if n < 1:
            raise CaneError(f"class {label!r} has no images")
        train, test = split_counts(n)
        factor = augmentation_factor(n)
        plan.rows.append(PlanRow(label, n, train, test, factor, train * (1 + factor)))
    return plan


# ---------------------------------------------------------------------------
# augmentation application

def _op_rng(seed: int, image_id: str, op_index: int) -> np.random.Generator:
    digest = hashlib.sha256(f"{seed}:{image_id}:{op_index}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def _apply_op(img: Image.Image, kind: str, rng: np.random.Generator) -> Image.Image:
    if kind == "hflip":
        return img.transpose(Image.FLIP_LEFT_RIGHT)
    if kind == "vflip":
        return img.transpose(Image.FLIP_TOP_BOTTOM)
    if kind == "rotate":
        angle = float(rng.uniform(-25.0, 25.0))
        return img.rotate(angle, resample=Image.BILINEAR)
    if kind == "brightness":
        scale = float(rng.uniform(0.8, 1.2))
        arr = np.asarray(img, dtype=np.float32) * scale
        return Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8))
    if kind == "contrast":
        scale = float(rng.uniform(0.8, 1.2))
        arr = np.asarray(img, dtype=np.float32)
        arr = (arr - arr.mean()) * scale + arr.mean()
        return Image.fromarray(np.clip(arr, 0, 255).astype(np.uint8))
    if kind == "crop":
        w, h = img.size
        cw, ch = int(round(w * 0.9)), int(round(h * 0.9))
        x0 = int(rng.integers(0, w - cw + 1))
        y0 = int(rng.integers(0, h - ch + 1))
        return img.crop((x0, y0, x0 + cw, y0 + ch))
    raise CaneError(f"unknown augmentation op {kind!r}")


def apply_augmentations(image, factor: int, seed: int = 0,
                        image_id: str = "") -> list[Image.Image]:
    """Produce `factor` deterministic 224x224 augmented variants of one image.

    Ops are drawn without replacement from the fixed set; if factor exceeds the
    set size the cycle restarts with freshly parameterized ops.
    """
    if factor < 0:
        raise CaneError("factor must be >= 0")
    img = _to_image(image).convert("RGB")
    order_rng = _op_rng(seed, image_id, -1)
    outputs = []
    order: list[str] = []
    for i in range(factor):
        if i % len(AUGMENT_OPS) == 0:
            order = list(AUGMENT_OPS)
            order_rng.shuffle(order)
        kind = order[i % len(AUGMENT_OPS)]
        out = _apply_op(img, kind, _op_rng(seed, image_id, i))
        outputs.append(out.resize((224, 224), Image.BILINEAR))
    return outputs


# ---------------------------------------------------------------------------
# preprocessing

def preprocess(image, size: int = 224) -> np.ndarray:
    """Decode -> RGB -> bilinear resize -> [0,1] -> channel normalize; (1,3,S,S)."""
    img = _to_image(image).convert("RGB")
    arr = np.asarray(img, dtype=np.float32).transpose(2, 0, 1)[None, :, :, :]
    arr = T.bilinear_resize(arr, size, size) / np.float32(255.0)
    mean = np.asarray(NORM_MEAN, dtype=np.float32)[None, :, None, None]
    std = np.asarray(NORM_STD, dtype=np.float32)[None, :, None, None]
    return ((arr - mean) / std).astype(np.float32)
