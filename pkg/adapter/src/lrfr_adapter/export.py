"""Batch embedding of manifest images into the toolkit's binary format."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import AdapterConfig
from .formats import ManifestRow, write_embedding_file
from .models import ModelError, load_embedder
from .preprocess import load_rgb, preprocess

log = logging.getLogger("lrfr_adapter.export")


@dataclass(frozen=True)
class ExportFailure:
    image_id: str
    error: str
    message: str


@dataclass(frozen=True)
class ExportSummary:
    count: int
    dim: int
    failures: tuple[ExportFailure, ...] = field(default=())


def embed_and_export(
    rows: Sequence[ManifestRow],
    config: AdapterConfig,
    out_path: str | Path,
    embedder=None,
) -> ExportSummary:
    """Embed every row's image and write one embedding file.

    Per-image failures are logged and reported, never fatal; the output
    record order equals manifest order minus failures. ``embedder`` may be
    passed directly (already loaded); otherwise ``config.model`` is
    resolved.
    """
    if embedder is None:
        embedder = load_embedder(config.model, config.input_size, config.device)
    expected = getattr(embedder, "input_size", None)
    if expected is not None and expected != config.input_size:
        raise ModelError(
            f"model expects input size {expected}, config says {config.input_size}"
        )

    staged: list[tuple[ManifestRow, np.ndarray]] = []
    failures: list[ExportFailure] = []
    for row in rows:
        try:
            tensor = preprocess(load_rgb(row.path), config.input_size, config.normalization)
        except Exception as exc:
            log.warning("embedding failed for %s: %s", row.image_id, exc)
            failures.append(ExportFailure(row.image_id, type(exc).__name__, str(exc)))
            continue
        staged.append((row, tensor))

    records: list[tuple[str, str, np.ndarray]] = []
    for start in range(0, len(staged), config.batch_size):
        chunk = staged[start : start + config.batch_size]
        batch = np.stack([tensor for _, tensor in chunk])
        out = np.asarray(embedder(batch), dtype=np.float32)
        if out.shape != (len(chunk), embedder.dim):
            raise ModelError(
                f"model returned shape {out.shape}, expected ({len(chunk)}, {embedder.dim})"
            )
        for (row, _), vec in zip(chunk, out):
            records.append((row.image_id, row.subject_id, vec))

    write_embedding_file(embedder.dim, records, out_path)
    return ExportSummary(count=len(records), dim=embedder.dim, failures=tuple(failures))
