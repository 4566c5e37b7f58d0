"""Shared builders for synthetic corpora and embeddings."""
from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import pytest

from lrfr.corpus import ImageRecord, Manifest, write_manifest
from lrfr.embedding import Embedding, EmbeddingSet
from lrfr.geometry import FaceBox
from lrfr.imaging import ImageBuffer, save_png

FIXTURES = Path(__file__).parent / "fixtures"


def subject_image(subject_index: int, side: int = 64, noise_seed: int | None = None) -> ImageBuffer:
    """Distinct smooth pattern per subject; survives cropping and resampling.

    Each subject gets a unique low-frequency sinusoid pair, so reference
    embeddings cluster tightly by subject at any crop ratio or bottleneck
    resolution.
    """
    y, x = np.mgrid[0:side, 0:side].astype(np.float64)
    fx = 1 + subject_index % 5
    fy = 1 + subject_index // 5
    phase = 0.37 * subject_index
    channels = []
    for c in range(3):
        wave = np.sin(2 * np.pi * (fx * x + fy * y) / side + phase + 1.1 * c)
        channels.append(127.5 + 95.0 * wave)
    img = np.stack(channels, axis=2)
    if noise_seed is not None:
        rng = np.random.default_rng(noise_seed)
        img = img + rng.normal(scale=2.0, size=img.shape)
    return ImageBuffer(np.clip(np.round(img), 0, 255).astype(np.uint8))


def write_corpus(
    root: Path,
    n_subjects: int,
    conditions: tuple[str, ...] = ("d1", "d2", "d3"),
    probes_per_condition: int = 1,
    side: int = 64,
) -> Path:
    """Synthetic separable corpus on disk: PNG images plus a manifest CSV."""
    images = root / "src_images"
    images.mkdir(parents=True, exist_ok=True)
    records = []
    box = FaceBox(side * 0.125, side * 0.125, side * 0.75, side * 0.75)
    for s in range(n_subjects):
        subject = f"s{s:03d}"
        gal_path = images / f"{subject}_gallery.png"
        save_png(subject_image(s, side), gal_path)
        records.append(
            ImageRecord(f"{subject}_g", subject, "gallery", conditions[0], str(gal_path), box)
        )
        for ci, cond in enumerate(conditions):
            for p in range(probes_per_condition):
                image_id = f"{subject}_{cond}_p{p}"
                path = images / f"{image_id}.png"
                save_png(subject_image(s, side, noise_seed=1000 * s + 10 * ci + p), path)
                records.append(ImageRecord(image_id, subject, "probe", cond, str(path), box))
    manifest_path = root / "manifest.csv"
    write_manifest(Manifest(name="manifest", records=tuple(records)), manifest_path)
    return manifest_path


def random_embedding_set(
    rng: np.random.Generator,
    n_subjects: int,
    dim: int,
    probes_per_subject: int = 0,
) -> tuple[EmbeddingSet, EmbeddingSet]:
    """Random gallery set and (optionally empty) probe set sharing subjects."""
    gallery = tuple(
        Embedding(f"g{i:03d}", f"s{i:03d}", rng.normal(size=dim).astype(np.float32))
        for i in range(n_subjects)
    )
    probes = tuple(
        Embedding(
            f"p{i:03d}_{j}",
            f"s{i:03d}",
            (gallery[i].vector + rng.normal(scale=0.7, size=dim)).astype(np.float32),
        )
        for i in range(n_subjects)
        for j in range(probes_per_subject)
    )
    return (
        EmbeddingSet(dim=dim, entries=gallery),
        EmbeddingSet(dim=dim, entries=probes),
    )


def tree_digest(root: Path) -> dict[str, str]:
    """Relative path -> sha256 for every file under root."""
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


@pytest.fixture(scope="session")
def natural_image_path() -> Path:
    path = FIXTURES / "natural.png"
    assert path.exists(), "checked-in fixture missing; run tests/fixtures/gen_natural.py"
    return path
