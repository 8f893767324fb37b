import io

import numpy as np
import pytest
from PIL import Image

from caneshuffle.model import ModelConfig, build_model

TINY_CONFIG = ModelConfig(
    input_size=64,
    stem_channels=8,
    stage_blocks=(1, 1),
    stage_channels=(16, 32),
    final_conv_channels=24,
    head_hidden=16,
    num_classes=5,
)


@pytest.fixture(scope="session")
def tiny_model():
    return build_model(TINY_CONFIG, seed=3)


@pytest.fixture(scope="session")
def default_model():
    return build_model(ModelConfig(), seed=0)


def synthetic_leaf(size=96, seed=7) -> Image.Image:
    """Deterministic leaf-ish RGB test image: green gradient with dark blotches."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size]
    g = 90 + 120 * (x / size)
    r = 40 + 30 * (y / size)
    b = np.full_like(g, 30.0)
    img = np.stack([r, g, b], axis=-1)
    for _ in range(5):
        cy, cx = rng.integers(10, size - 10, 2)
        rad = int(rng.integers(4, 10))
        mask = (y - cy) ** 2 + (x - cx) ** 2 < rad**2
        img[mask] = [120, 60, 30]
    return Image.fromarray(np.clip(img, 0, 255).astype(np.uint8))


def png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture(scope="session")
def leaf_image():
    return synthetic_leaf()


@pytest.fixture(scope="session")
def leaf_png(leaf_image):
    return png_bytes(leaf_image)
