"""Model input preprocessing: decode, resize, normalize, NCHW layout."""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class ImageLoadError(Exception):
    """Image missing or undecodable."""


def load_rgb(path: str | Path) -> np.ndarray:
    """Decode to an (h, w, 3) uint8 RGB array."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise ImageLoadError(f"cannot load {path}: {exc}") from exc


def normalize_samples(samples: np.ndarray) -> np.ndarray:
    """Map sample p to (p - 127.5) / 128 in float32, exactly.

    0 -> -0.99609375, 127.5 -> 0.0, 255 -> 0.99609375 (all three values and
    the constants are exactly representable in binary floating point).
    """
    x = np.asarray(samples, dtype=np.float32)
    return (x - np.float32(127.5)) / np.float32(128.0)


def preprocess(rgb: np.ndarray, input_size: int, normalization: str = "center-scale") -> np.ndarray:
    """uint8 HWC image -> float32 CHW tensor at input_size, normalized.

    The resize here is plain bilinear (model-zoo convention); crop-ratio
    geometry and resolution matching are the toolkit's responsibility and
    never happen in the adapter.
    """
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (h, w, 3) RGB array, got {rgb.shape}")
    if rgb.shape[0] != input_size or rgb.shape[1] != input_size:
        im = Image.fromarray(rgb, mode="RGB").resize(
            (input_size, input_size), Image.Resampling.BILINEAR
        )
        rgb = np.asarray(im, dtype=np.uint8)
    if normalization == "center-scale":
        x = normalize_samples(rgb)
    elif normalization == "none":
        x = rgb.astype(np.float32)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    return np.ascontiguousarray(x.transpose(2, 0, 1))
