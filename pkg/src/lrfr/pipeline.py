"""Per-record pipeline stages shared by the CLI subcommands and the sweep.

A cell of the crop-ratio x resolution grid is defined as the composition
of these stages, in order:

1. prepare:  extend the face box by the crop ratio, crop with edge
   padding, resize to the model input size.
2. matchres: gallery images only, pass through a target x target
   bottleneck (area down, bicubic up); probes are never matched.
3. embed:    run the backend over the staged images.

The model-input resize picks its kernel automatically: area when
shrinking, bicubic when enlarging (by output vs source pixel count). The
same functions back both the one-shot subcommands and the sweep, so a
sweep cell is identical to running the subcommands by hand.

Records without a face box are skipped with a report, never silently
dropped and never fatal: whether detection failures should count as
misses is the caller's policy, so the toolkit keeps them visible instead.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from .corpus import ImageRecord, Manifest
from .embedding import Embedding, EmbeddingBackend
from .errors import LrfrError
from .geometry import FaceBox, crop_padded, extend_box
from .imaging import ImageBuffer, load_image, match_resolution, resize, save_png

T = TypeVar("T")
U = TypeVar("U")


def input_resize_kernel(src_w: int, src_h: int, out_w: int, out_h: int) -> str:
    """Area for shrinking, bicubic for enlarging, by pixel count."""
    return "area" if out_w * out_h <= src_w * src_h else "bicubic"


def crop_to_input(img: ImageBuffer, box: FaceBox, ratio: float, input_size: int) -> ImageBuffer:
    """The prepare stage for one image: extend, padded crop, resize to input size."""
    crop = crop_padded(img, extend_box(box, ratio))
    kernel = input_resize_kernel(crop.width, crop.height, input_size, input_size)
    return resize(crop, input_size, input_size, kernel)


def gallery_bottleneck(img: ImageBuffer, target: int, input_size: int) -> ImageBuffer:
    """The matchres stage for one gallery image."""
    return match_resolution(img, target, input_size)


@dataclass(frozen=True)
class StageOutcome:
    """Result of one per-record worker: ok, skipped, or failed."""

    image_id: str
    status: str  # "ok" | "skipped" | "error"
    error: str = ""
    message: str = ""


def safe_image_filename(image_id: str) -> str:
    cleaned = "".join(c if c.isalnum() or c in "-_." else "_" for c in image_id)
    return f"{cleaned}.png"


def prepare_task(args: tuple) -> StageOutcome:
    """Worker: crop+resize one record's image and write the staged PNG."""
    image_id, src_path, dst_path, box_fields, ratio, input_size = args
    if box_fields is None:
        return StageOutcome(image_id, "skipped", "NoFaceBox", "record has no face box")
    try:
        img = load_image(src_path)
        staged = crop_to_input(img, FaceBox(*box_fields), ratio, input_size)
        save_png(staged, dst_path)
    except LrfrError as exc:
        return StageOutcome(image_id, "error", type(exc).__name__, str(exc))
    return StageOutcome(image_id, "ok")


def matchres_task(args: tuple) -> StageOutcome:
    """Worker: resolution-match one gallery image and write the PNG."""
    image_id, src_path, dst_path, target, input_size = args
    try:
        img = load_image(src_path)
        save_png(gallery_bottleneck(img, target, input_size), dst_path)
    except LrfrError as exc:
        return StageOutcome(image_id, "error", type(exc).__name__, str(exc))
    return StageOutcome(image_id, "ok")


def embed_task(args: tuple) -> tuple[StageOutcome, bytes | None]:
    """Worker: embed one image with a named backend, returning raw vector bytes."""
    from .embedding import resolve_backend

    image_id, src_path, backend_name = args
    try:
        backend = resolve_backend(backend_name)
        arg = image_id if backend.by_id else load_image(src_path)
        vector = backend(arg)
    except LrfrError as exc:
        return StageOutcome(image_id, "error", type(exc).__name__, str(exc)), None
    return StageOutcome(image_id, "ok"), vector.tobytes()


def map_ordered(fn: Callable[[T], U], items: Sequence[T], jobs: int) -> list[U]:
    """Apply ``fn`` over ``items``, optionally across processes.

    Output order always equals input order, so results are independent of
    the worker count.
    """
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=chunk))


def default_jobs() -> int:
    raw = os.environ.get("LRFR_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def embed_records(
    records: Iterable[ImageRecord],
    backend: EmbeddingBackend,
    image_of: Callable[[ImageRecord], ImageBuffer],
) -> tuple[list[Embedding], list[StageOutcome]]:
    """Embed records in order with an already-resolved backend (in-process path)."""
    entries: list[Embedding] = []
    failures: list[StageOutcome] = []
    for rec in records:
        try:
            arg = rec.image_id if backend.by_id else image_of(rec)
            vector = backend(arg)
        except LrfrError as exc:
            failures.append(StageOutcome(rec.image_id, "error", type(exc).__name__, str(exc)))
            continue
        entries.append(Embedding(rec.image_id, rec.subject_id, vector))
    return entries, failures


def load_record_image(manifest: Manifest, record: ImageRecord) -> ImageBuffer:
    return load_image(manifest.resolve_path(record))


def staged_path(out_dir: Path, record: ImageRecord) -> Path:
    return out_dir / "images" / safe_image_filename(record.image_id)
