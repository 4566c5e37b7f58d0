"""Regenerate the checked-in natural-image fixture (natural.png).

A 128x128 RGB image with broadband content: smooth gradients, a few
Gaussian blobs, and mild texture. Smooth enough that a resolution
bottleneck at t destroys strictly more detail for smaller t, which the
imaging tests rely on.

Run from the repo root: python tests/fixtures/gen_natural.py
"""
from pathlib import Path

import numpy as np

from lrfr.imaging import ImageBuffer, save_png

SIDE = 128


def build() -> ImageBuffer:
    rng = np.random.default_rng(20240817)
    y, x = np.mgrid[0:SIDE, 0:SIDE].astype(np.float64)

    channels = []
    for c in range(3):
        img = 90.0 + 50.0 * np.sin(2 * np.pi * (x * (c + 1) / 170.0 + y / 260.0))
        for _ in range(6):
            cx, cy = rng.uniform(10, SIDE - 10, size=2)
            sigma = rng.uniform(6, 22)
            amp = rng.uniform(-70, 90)
            img += amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma**2))
        img += rng.normal(scale=6.0, size=(SIDE, SIDE))
        channels.append(img)

    stacked = np.stack(channels, axis=2)
    return ImageBuffer(np.clip(np.round(stacked), 0, 255).astype(np.uint8))


if __name__ == "__main__":
    out = Path(__file__).parent / "natural.png"
    save_png(build(), out)
    print(f"wrote {out}")
