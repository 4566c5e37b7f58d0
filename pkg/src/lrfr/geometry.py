"""Face-box extension by crop ratio and padded cropping.

Extension is center-anchored: both dimensions scale by the same ratio and
the box center stays fixed, so a ratio of 1.3 keeps 30% more context
around the detection on every side. Boxes are plain float geometry and may
extend past the image after extension; ``crop_padded`` handles that by
edge replication instead of clamping the box, which would change the
crop's aspect ratio and information content.

Rasterization rule: output size is ``round half-away-from-zero`` of the
box width/height, and the origin is ``floor(x), floor(y)``. Coordinates
stay float until that point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCrop, InvalidRatio
from .imaging import ImageBuffer


@dataclass(frozen=True)
class FaceBox:
    """Pixel-space bounding box; w and h must be positive."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box width/height must be > 0, got w={self.w} h={self.h}")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)


def extend_box(box: FaceBox, ratio: float) -> FaceBox:
    """Scale a box about its center by ``ratio``; ratio 1.0 is exact identity."""
    if not ratio > 0:
        raise InvalidRatio(f"crop ratio must be > 0, got {ratio}")
    if ratio == 1.0:
        return box
    new_w = box.w * ratio
    new_h = box.h * ratio
    return FaceBox(
        x=box.x + (box.w - new_w) / 2.0,
        y=box.y + (box.h - new_h) / 2.0,
        w=new_w,
        h=new_h,
    )


def _round_half_away(v: float) -> int:
    # v > 0 here, so half-away-from-zero is floor(v + 0.5)
    return int(math.floor(v + 0.5))


def crop_padded(img: ImageBuffer, box: FaceBox) -> ImageBuffer:
    """Crop ``box`` out of ``img``, replicating edge pixels outside the image.

    Pixels inside the source are copied exactly; a crop fully inside the
    image is byte-identical to a direct slice.
    """
    out_w = _round_half_away(box.w)
    out_h = _round_half_away(box.h)
    if out_w < 1 or out_h < 1:
        raise EmptyCrop(f"box {box} rounds to {out_w}x{out_h}")
    x0 = int(math.floor(box.x))
    y0 = int(math.floor(box.y))

    cols = np.clip(np.arange(x0, x0 + out_w), 0, img.width - 1)
    rows = np.clip(np.arange(y0, y0 + out_h), 0, img.height - 1)
    pixels = img.pixels[np.ix_(rows, cols)]
    return ImageBuffer(pixels=np.ascontiguousarray(pixels))
