"""Writers for the lrfr toolkit's external file formats.

Implemented independently of the lrfr package on purpose: this adapter
talks to the toolkit only through files, and these writers are the
boundary contract. Layouts must stay bit-compatible:

Manifest CSV (UTF-8, LF): fixed 19-column header, box and landmark
columns empty or fully populated per group, floats with ``.`` decimals.

Embedding file (little-endian, no padding)::

    b"LRFR-EMB" | version u16 (=1) | dim u32 | count u64 |
    records: id_len u16, id utf-8, subj_len u16, subj utf-8, dim x f32
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

MANIFEST_HEADER = (
    "image_id", "subject_id", "role", "condition", "path",
    "box_x", "box_y", "box_w", "box_h",
    "lm1x", "lm1y", "lm2x", "lm2y", "lm3x", "lm3y", "lm4x", "lm4y", "lm5x", "lm5y",
)

EMB_MAGIC = b"LRFR-EMB"
EMB_VERSION = 1


@dataclass
class ManifestRow:
    """One image entry; box is (x, y, w, h), landmarks are 5 (x, y) points."""

    image_id: str
    subject_id: str
    role: str
    condition: str
    path: str
    box: tuple[float, float, float, float] | None = None
    landmarks: tuple[tuple[float, float], ...] | None = None


def resolve_row_paths(rows: Iterable[ManifestRow], base_dir: str | Path) -> list[ManifestRow]:
    """Resolve relative image paths against the manifest's own directory."""
    base = Path(base_dir)
    out = []
    for row in rows:
        p = Path(row.path)
        out.append(row if p.is_absolute() else replace(row, path=str(base / p)))
    return out


def read_manifest_rows(path: str | Path) -> list[ManifestRow]:
    """Lenient reader for listing/manifest CSVs (full validation is lrfr's job)."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    if not rows or tuple(c.strip() for c in rows[0]) != MANIFEST_HEADER:
        raise ValueError(f"{path}: expected the 19-column manifest header")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(MANIFEST_HEADER):
            raise ValueError(f"{path} row {i}: expected {len(MANIFEST_HEADER)} columns")
        box_cells = [c.strip() for c in row[5:9]]
        box = tuple(float(c) for c in box_cells) if all(box_cells) else None
        lm_cells = [c.strip() for c in row[9:19]]
        landmarks = None
        if all(lm_cells):
            vals = [float(c) for c in lm_cells]
            landmarks = tuple(zip(vals[0::2], vals[1::2]))
        out.append(ManifestRow(row[0], row[1], row[2], row[3], row[4], box, landmarks))
    return out


def write_manifest_rows(rows: Iterable[ManifestRow], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for row in rows:
            box_cells = ["", "", "", ""]
            if row.box is not None:
                box_cells = [repr(float(v)) for v in row.box]
            lm_cells = [""] * 10
            if row.landmarks is not None:
                lm_cells = [repr(float(v)) for pt in row.landmarks for v in pt]
            writer.writerow(
                [row.image_id, row.subject_id, row.role, row.condition, row.path]
                + box_cells + lm_cells
            )


def write_embedding_file(
    dim: int,
    records: Sequence[tuple[str, str, np.ndarray]],
    path: str | Path,
) -> None:
    """Write (image_id, subject_id, vector) records; float32 bits pass through."""
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<HIQ", EMB_VERSION, dim, len(records)))
        for image_id, subject_id, vector in records:
            vec = np.ascontiguousarray(vector, dtype="<f4")
            if vec.shape != (dim,):
                raise ValueError(
                    f"vector for {image_id!r} has shape {vec.shape}, expected ({dim},)"
                )
            id_bytes = image_id.encode("utf-8")
            subj_bytes = subject_id.encode("utf-8")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(struct.pack("<H", len(subj_bytes)))
            fh.write(subj_bytes)
            fh.write(vec.tobytes())
