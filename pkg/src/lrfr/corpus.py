"""Gallery/probe manifest loading, validation, and partitioning.

A manifest is a UTF-8 CSV with the fixed header::

    image_id,subject_id,role,condition,path,box_x,box_y,box_w,box_h,
    lm1x,lm1y,lm2x,lm2y,lm3x,lm3y,lm4x,lm4y,lm5x,lm5y

(one line; wrapped here for readability). Box and landmark columns may be
empty, all-or-nothing per group. Lines starting with ``#`` are provenance
comments and are skipped on read; the writer never emits them.

The watchlist protocol is enforced at load time: exactly one gallery row
per subject, and every probe subject must be enrolled in the gallery
(closed-set identification). Condition tags are opaque strings; nothing
here hard-codes any particular benchmark's tag set.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    DuplicateGallery,
    DuplicateImageId,
    ParseError,
    UnknownProbeSubject,
)
from .geometry import FaceBox

MANIFEST_HEADER = (
    "image_id", "subject_id", "role", "condition", "path",
    "box_x", "box_y", "box_w", "box_h",
    "lm1x", "lm1y", "lm2x", "lm2y", "lm3x", "lm3y", "lm4x", "lm4y", "lm5x", "lm5y",
)

ROLES = ("gallery", "probe")

Landmarks = tuple[
    tuple[float, float], tuple[float, float], tuple[float, float],
    tuple[float, float], tuple[float, float],
]


@dataclass(frozen=True)
class ImageRecord:
    """One corpus entry binding an image to a subject, role, and condition."""

    image_id: str
    subject_id: str
    role: str
    condition: str
    path: str
    box: FaceBox | None = None
    landmarks: Landmarks | None = None


@dataclass(frozen=True)
class Manifest:
    """Immutable, validated collection of image records.

    ``base_dir`` is the directory the manifest was loaded from; relative
    record paths resolve against it (see :meth:`resolve_path`).
    """

    name: str
    records: tuple[ImageRecord, ...]
    base_dir: Path | None = field(default=None, compare=False)

    @property
    def gallery(self) -> list[ImageRecord]:
        return [r for r in self.records if r.role == "gallery"]

    @property
    def probes(self) -> list[ImageRecord]:
        return [r for r in self.records if r.role == "probe"]

    def resolve_path(self, record: ImageRecord) -> Path:
        p = Path(record.path)
        if p.is_absolute() or self.base_dir is None:
            return p
        return self.base_dir / p


def _parse_float(text: str, row_num: int, col: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"row {row_num}: column {col!r} is not a number: {text!r}") from None


def _parse_row(row: list[str], row_num: int) -> ImageRecord:
    if len(row) != len(MANIFEST_HEADER):
        raise ParseError(
            f"row {row_num}: expected {len(MANIFEST_HEADER)} columns, got {len(row)}"
        )
    image_id, subject_id, role, condition, path = (c.strip() for c in row[:5])
    if not image_id:
        raise ParseError(f"row {row_num}: empty image_id")
    if not subject_id:
        raise ParseError(f"row {row_num}: empty subject_id")
    if role not in ROLES:
        raise ParseError(f"row {row_num}: role must be one of {ROLES}, got {role!r}")
    if not condition:
        raise ParseError(f"row {row_num}: empty condition")
    if not path:
        raise ParseError(f"row {row_num}: empty path")

    box_cells = [c.strip() for c in row[5:9]]
    if any(box_cells) and not all(box_cells):
        raise ParseError(f"row {row_num}: box columns must be all set or all empty")
    box = None
    if all(box_cells):
        x, y, w, h = (_parse_float(c, row_num, n) for c, n in zip(box_cells, MANIFEST_HEADER[5:9]))
        if w <= 0 or h <= 0:
            raise ParseError(f"row {row_num}: box width/height must be > 0, got w={w} h={h}")
        box = FaceBox(x, y, w, h)

    lm_cells = [c.strip() for c in row[9:19]]
    if any(lm_cells) and not all(lm_cells):
        raise ParseError(f"row {row_num}: landmark columns must be all set or all empty")
    landmarks: Landmarks | None = None
    if all(lm_cells):
        vals = [_parse_float(c, row_num, n) for c, n in zip(lm_cells, MANIFEST_HEADER[9:19])]
        landmarks = tuple(zip(vals[0::2], vals[1::2]))  # type: ignore[assignment]

    return ImageRecord(image_id, subject_id, role, condition, path, box, landmarks)


def _validate(records: list[ImageRecord]) -> None:
    seen_ids: set[str] = set()
    gallery_subjects: set[str] = set()
    for rec in records:
        if rec.image_id in seen_ids:
            raise DuplicateImageId(f"image_id {rec.image_id!r} appears more than once")
        seen_ids.add(rec.image_id)
        if rec.role == "gallery":
            if rec.subject_id in gallery_subjects:
                raise DuplicateGallery(
                    f"subject {rec.subject_id!r} has more than one gallery row"
                )
            gallery_subjects.add(rec.subject_id)
    for rec in records:
        if rec.role == "probe" and rec.subject_id not in gallery_subjects:
            raise UnknownProbeSubject(
                f"probe subject {rec.subject_id!r} has no gallery entry"
            )


def load_manifest(path: str | Path, name: str | None = None) -> Manifest:
    """Load and validate a manifest CSV.

    Raises ParseError, DuplicateImageId, DuplicateGallery, or
    UnknownProbeSubject on contract violations.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read manifest {path}: {exc}") from exc

    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise ParseError(f"{path}: empty manifest file")
    if tuple(c.strip() for c in rows[0]) != MANIFEST_HEADER:
        raise ParseError(f"{path}: bad header: {','.join(rows[0])!r}")

    records = [_parse_row(row, i + 2) for i, row in enumerate(rows[1:]) if row]
    _validate(records)
    # base_dir is anchored absolutely so resolved record paths stay valid
    # when written into derived manifests under other directories
    return Manifest(
        name=name if name is not None else path.stem,
        records=tuple(records),
        base_dir=path.resolve().parent,
    )


def _fmt(v: float) -> str:
    return repr(float(v))


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    """Write a manifest CSV that ``load_manifest`` reads back field-for-field."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        for rec in manifest.records:
            box_cells = ["", "", "", ""]
            if rec.box is not None:
                box_cells = [_fmt(rec.box.x), _fmt(rec.box.y), _fmt(rec.box.w), _fmt(rec.box.h)]
            lm_cells = [""] * 10
            if rec.landmarks is not None:
                lm_cells = [_fmt(v) for pt in rec.landmarks for v in pt]
            writer.writerow(
                [rec.image_id, rec.subject_id, rec.role, rec.condition, rec.path]
                + box_cells + lm_cells
            )


def partition_by_condition(manifest: Manifest) -> dict[str, list[ImageRecord]]:
    """Group probe records by condition tag; gallery records are excluded.

    Keys are sorted lexicographically; records keep manifest order within
    each partition. Partitions are disjoint and their union is the probe set.
    """
    parts: dict[str, list[ImageRecord]] = {}
    for rec in manifest.probes:
        parts.setdefault(rec.condition, []).append(rec)
    return {cond: parts[cond] for cond in sorted(parts)}


def subject_ids(manifest: Manifest) -> list[str]:
    """Sorted, deduplicated subject ids over all records."""
    return sorted({rec.subject_id for rec in manifest.records})
