"""Image buffers, deterministic resizing, and resolution matching.

Resize kernels are implemented here rather than delegated to an image
library so the arithmetic is pinned exactly:

* ``area``: box filter with fractional pixel coverage, weights normalized
  per output pixel. Used for downsampling. Identity when dims are
  unchanged.
* ``bilinear``: 2-tap linear interpolation, half-pixel-center coordinate
  mapping (``src = (dst + 0.5) * in/out - 0.5``). Identity when dims are
  unchanged.
* ``bicubic``: 4-tap Catmull-Rom cubic (a = -0.5), same coordinate
  mapping. Used for upsampling.

All passes run in 32-bit float (horizontal first, then vertical, rounding
only once at the end), output samples are rounded half-up and clamped to
[0, 255]. Every operation is a pure function: repeated calls are
bit-identical regardless of parallelism.

Resolution matching imitates a low-resolution capture of a high-resolution
gallery image: downsample to ``target x target`` with the area kernel,
then upsample to the model input size with bicubic. Probe images are never
matched; they go straight to the model input size.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DecodeError, InvalidDims, UpscaleAsMatch

KERNELS = ("area", "bilinear", "bicubic")


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """8-bit image, row-major ``(height, width, channels)`` with 1 or 3 channels."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        p = self.pixels
        if p.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {p.dtype}")
        if p.ndim != 3 or p.shape[2] not in (1, 3):
            raise ValueError(f"pixels must be (h, w, c) with c in {{1, 3}}, got {p.shape}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got {p.shape}")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


def _area_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-output-pixel (indices, weights) for box-filter resampling."""
    scale = n_in / n_out
    taps: list[tuple[list[int], list[float]]] = []
    for i in range(n_out):
        lo = i * scale
        hi = min((i + 1) * scale, float(n_in))
        first = int(math.floor(lo))
        last = min(int(math.ceil(hi)), n_in) - 1
        idx: list[int] = []
        wts: list[float] = []
        for k in range(first, last + 1):
            cover = min(hi, k + 1.0) - max(lo, float(k))
            if cover > 0:
                idx.append(k)
                wts.append(cover)
        total = sum(wts)
        taps.append((idx, [w / total for w in wts]))

    width = max(len(idx) for idx, _ in taps)
    indices = np.zeros((n_out, width), dtype=np.intp)
    weights = np.zeros((n_out, width), dtype=np.float32)
    for i, (idx, wts) in enumerate(taps):
        indices[i, : len(idx)] = idx
        weights[i, : len(wts)] = np.asarray(wts, dtype=np.float32)
    return indices, weights


def _src_coords(n_in: int, n_out: int) -> np.ndarray:
    return (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5


def _bilinear_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    sx = _src_coords(n_in, n_out)
    base = np.floor(sx)
    frac = sx - base
    i0 = base.astype(np.intp)
    indices = np.stack([np.clip(i0, 0, n_in - 1), np.clip(i0 + 1, 0, n_in - 1)], axis=1)
    weights = np.stack([1.0 - frac, frac], axis=1).astype(np.float32)
    return indices, weights


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    # |t| <= 2; a = -0.5
    t = np.abs(t)
    t2 = t * t
    t3 = t2 * t
    near = 1.5 * t3 - 2.5 * t2 + 1.0
    far = -0.5 * t3 + 2.5 * t2 - 4.0 * t + 2.0
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _bicubic_taps(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    sx = _src_coords(n_in, n_out)
    base = np.floor(sx)
    frac = sx - base
    i0 = base.astype(np.intp)
    indices = np.stack(
        [np.clip(i0 + off, 0, n_in - 1) for off in (-1, 0, 1, 2)], axis=1
    )
    weights = np.stack(
        [_catmull_rom(frac - off) for off in (-1, 0, 1, 2)], axis=1
    ).astype(np.float32)
    return indices, weights


_TAP_BUILDERS = {
    "area": _area_taps,
    "bilinear": _bilinear_taps,
    "bicubic": _bicubic_taps,
}


def _resample_axis(arr: np.ndarray, indices: np.ndarray, weights: np.ndarray, axis: int) -> np.ndarray:
    """Weighted gather along one axis, float32, fixed accumulation order."""
    n_out, n_taps = indices.shape
    w_shape = [1, 1, 1]
    w_shape[axis] = n_out
    out_shape = list(arr.shape)
    out_shape[axis] = n_out
    out = np.zeros(out_shape, dtype=np.float32)
    for t in range(n_taps):
        out += np.take(arr, indices[:, t], axis=axis) * weights[:, t].reshape(w_shape)
    return out


def resize(img: ImageBuffer, out_w: int, out_h: int, kernel: str) -> ImageBuffer:
    """Resize to exactly ``out_w x out_h`` with the named kernel."""
    if out_w < 1 or out_h < 1:
        raise InvalidDims(f"output dims must be >= 1, got {out_w}x{out_h}")
    if kernel not in KERNELS:
        raise ValueError(f"kernel must be one of {KERNELS}, got {kernel!r}")
    build = _TAP_BUILDERS[kernel]
    acc = img.pixels.astype(np.float32)
    acc = _resample_axis(acc, *build(img.width, out_w), axis=1)
    acc = _resample_axis(acc, *build(img.height, out_h), axis=0)
    samples = np.clip(np.floor(acc + np.float32(0.5)), 0.0, 255.0)
    return ImageBuffer(pixels=samples.astype(np.uint8))


def match_resolution(img: ImageBuffer, target: int, input_size: int) -> ImageBuffer:
    """Pass ``img`` through a ``target x target`` bottleneck, ending at ``input_size``.

    Definitionally ``resize(resize(img, t, t, area), s, s, bicubic)``. Warns
    with ``UpscaleAsMatch`` when the "downsampling" step would actually
    upscale an axis.
    """
    if target < 1 or input_size < 1:
        raise InvalidDims(f"target and input_size must be >= 1, got {target}, {input_size}")
    if target > min(img.width, img.height):
        warnings.warn(
            f"resolution target {target} exceeds source {img.width}x{img.height}; "
            "the downsampling step will upscale",
            UpscaleAsMatch,
            stacklevel=2,
        )
    small = resize(img, target, target, "area")
    return resize(small, input_size, input_size, "bicubic")


_LUMA = np.asarray([0.299, 0.587, 0.114], dtype=np.float64)


def to_grayscale(img: ImageBuffer) -> ImageBuffer:
    """Luma conversion (0.299 R + 0.587 G + 0.114 B), rounded half-up."""
    if img.channels == 1:
        return img
    luma = img.pixels.astype(np.float64) @ _LUMA
    samples = np.clip(np.floor(luma + 0.5), 0.0, 255.0)
    return ImageBuffer(pixels=samples.astype(np.uint8)[:, :, np.newaxis])


def load_image(path) -> ImageBuffer:
    """Decode a PNG or JPEG file; 1-channel stays 1-channel, everything else becomes RGB."""
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode == "L":
                arr = np.asarray(im, dtype=np.uint8)[:, :, np.newaxis]
            else:
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise DecodeError(f"cannot decode image {path}: {exc}") from exc
    return ImageBuffer(pixels=np.ascontiguousarray(arr))


def save_png(img: ImageBuffer, path) -> None:
    """Write a PNG; intermediate pipeline artifacts always use PNG to avoid lossy drift."""
    from PIL import Image

    if img.channels == 1:
        pil = Image.fromarray(img.pixels[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(img.pixels, mode="RGB")
    pil.save(path, format="PNG")
