"""Rank-k identification rates, CMC curves, RRSSV statistics, and sweep grids.

Rank-k IR is the percentage of probes whose true subject appears within
the top k ranked gallery matches; the CMC curve is Rank-k IR as a function
of k, so the two must agree exactly at every k (and do, by construction of
the tests, not of the code: they are separate code paths).

RRSSV (repeated random sub-sampling validation) re-runs identification on
randomly drawn subject subsets and reports mean and sample standard
deviation (n-1 denominator) of Rank-1 IR per condition. Subset draws must
be bit-reproducible across runs, platforms, and languages, so the
generator is pinned:

* PRNG: splitmix64 (state += 0x9E3779B97F4A7C15; two xor-multiply mixing
  rounds per output).
* Stream for repeat r (0-based): seed a splitmix64 with the experiment
  seed, take its (r+1)-th output, and use that as the state of a fresh
  splitmix64 for the repeat.
* Draw: Fisher-Yates shuffle over the lexicographically sorted subject
  list (descending index i, j = next() % (i+1)), then take the first
  subset_size entries.

Per-probe errors are excluded from IR denominators and counted separately;
a missing or degenerate probe should be visible in reports, not silently
scored as a miss.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import Manifest
from .embedding import EmbeddingBackend, EmbeddingSet
from .errors import (
    EmptyResults,
    InconsistentGallery,
    LrfrError,
    MissingEmbedding,
    SubsetTooLarge,
)
from .matcher import IdentificationResult, build_gallery, identify_all
from .pipeline import crop_to_input, gallery_bottleneck

OVERALL = "overall"


# --- rank metrics ---

def ranks_of_truth(results: Sequence[IdentificationResult]) -> np.ndarray:
    return np.asarray([r.rank_of_truth() for r in results], dtype=np.int64)


def rank_k_ir(results: Sequence[IdentificationResult], k: int) -> float:
    """Percentage of results whose true subject ranks within the top k."""
    if k < 1:
        raise ValueError(f"rank k must be >= 1, got {k}")
    if not results:
        raise EmptyResults("rank-k IR over zero results is undefined")
    hits = sum(1 for r in results if r.rank_of_truth() <= k)
    return 100.0 * hits / len(results)


def cmc(results: Sequence[IdentificationResult]) -> list[tuple[int, float]]:
    """Cumulative match characteristic: (k, Rank-k IR) for k = 1..G."""
    if not results:
        raise EmptyResults("CMC over zero results is undefined")
    sizes = {len(r.ranked) for r in results}
    if len(sizes) != 1:
        raise InconsistentGallery(f"results rank different gallery sizes: {sorted(sizes)}")
    gallery_size = sizes.pop()
    ranks = ranks_of_truth(results)
    counts = np.bincount(ranks, minlength=gallery_size + 1)[1:]
    cumulative = np.cumsum(counts)
    return [(k + 1, 100.0 * int(c) / len(results)) for k, c in enumerate(cumulative)]


# --- per-condition reports ---

@dataclass(frozen=True)
class ConditionStats:
    rank_ir: dict[int, float]
    probe_count: int
    error_count: int


@dataclass(frozen=True)
class EvalReport:
    per_condition: dict[str, ConditionStats]
    overall: ConditionStats
    gallery_size: int


def build_report(
    results: Sequence[IdentificationResult],
    condition_of: Mapping[str, str],
    ranks: Sequence[int],
    error_counts: Mapping[str, int] | None = None,
) -> EvalReport:
    """Group results by condition and compute Rank-k IR at the requested ranks."""
    if not results:
        raise EmptyResults("cannot build a report from zero results")
    sizes = {len(r.ranked) for r in results}
    if len(sizes) != 1:
        raise InconsistentGallery(f"results rank different gallery sizes: {sorted(sizes)}")
    gallery_size = sizes.pop()

    grouped: dict[str, list[IdentificationResult]] = {}
    for res in results:
        try:
            cond = condition_of[res.probe_image_id]
        except KeyError:
            raise ValueError(f"no condition known for probe {res.probe_image_id!r}") from None
        grouped.setdefault(cond, []).append(res)

    errors = dict(error_counts or {})

    def stats(subset: list[IdentificationResult], err: int) -> ConditionStats:
        return ConditionStats(
            rank_ir={k: rank_k_ir(subset, k) for k in ranks},
            probe_count=len(subset),
            error_count=err,
        )

    per_condition = {
        cond: stats(grouped[cond], errors.get(cond, 0)) for cond in sorted(grouped)
    }
    overall = stats(list(results), sum(errors.values()))
    return EvalReport(per_condition=per_condition, overall=overall, gallery_size=gallery_size)


# --- seeded subject subsampling ---

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Minimal portable 64-bit PRNG; identical output in any language."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK64

    def next(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def repeat_stream(seed: int, repeat_index: int) -> SplitMix64:
    root = SplitMix64(seed)
    value = 0
    for _ in range(repeat_index + 1):
        value = root.next()
    return SplitMix64(value)


def draw_subjects(subjects: Sequence[str], subset_size: int, seed: int, repeat_index: int) -> list[str]:
    """Seeded draw of ``subset_size`` subjects without replacement.

    Fisher-Yates over the sorted subject list with the pinned per-repeat
    stream; the same (seed, repeat_index) always yields the same subset.
    """
    if subset_size > len(subjects):
        raise SubsetTooLarge(f"subset {subset_size} > {len(subjects)} subjects")
    rng = repeat_stream(seed, repeat_index)
    pool = sorted(subjects)
    for i in range(len(pool) - 1, 0, -1):
        j = rng.next() % (i + 1)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:subset_size]


@dataclass(frozen=True)
class RrssvReport:
    repeats: int
    subset_size: int
    seed: int
    conditions: tuple[str, ...]
    mean: dict[str, float]
    std: dict[str, float]
    raw: dict[str, list[float]]  # per-condition, one value per repeat
    error_count: int = 0


def rrssv(
    manifest: Manifest,
    gallery_set: EmbeddingSet,
    probe_set: EmbeddingSet,
    subset_size: int,
    repeats: int,
    seed: int,
) -> RrssvReport:
    """Rank-1 IR mean/std over seeded random subject subsets.

    Each repeat restricts both gallery and probes to the drawn subjects,
    rebuilds the gallery index (the ranking problem shrinks with the
    subset), and evaluates Rank-1 IR per condition plus overall.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    subjects = sorted({rec.subject_id for rec in manifest.gallery})
    if subset_size > len(subjects):
        raise SubsetTooLarge(f"subset {subset_size} > {len(subjects)} subjects in manifest")

    condition_of = {rec.image_id: rec.condition for rec in manifest.probes}
    gallery_by_subject = {e.subject_id: e for e in gallery_set.entries}
    missing = [s for s in subjects if s not in gallery_by_subject]
    if missing:
        raise MissingEmbedding(f"no gallery embedding for subjects {missing[:5]}")

    conditions = sorted({rec.condition for rec in manifest.probes})
    raw: dict[str, list[float]] = {cond: [] for cond in [*conditions, OVERALL]}
    error_count = 0

    for r in range(repeats):
        subset = set(draw_subjects(subjects, subset_size, seed, r))
        sub_gallery = EmbeddingSet(
            dim=gallery_set.dim,
            entries=tuple(gallery_by_subject[s] for s in sorted(subset)),
        )
        sub_probes = EmbeddingSet(
            dim=probe_set.dim,
            entries=tuple(e for e in probe_set.entries if e.subject_id in subset),
        )
        index = build_gallery(sub_gallery)
        batch = identify_all(sub_probes, index)
        error_count += len(batch.errors)

        grouped: dict[str, list[IdentificationResult]] = {}
        for res in batch.results:
            grouped.setdefault(condition_of[res.probe_image_id], []).append(res)
        for cond in conditions:
            if grouped.get(cond):
                raw[cond].append(rank_k_ir(grouped[cond], 1))
        if batch.results:
            raw[OVERALL].append(rank_k_ir(list(batch.results), 1))

    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for cond, values in raw.items():
        if not values:
            continue
        mean[cond] = float(np.mean(values))
        std[cond] = float(np.std(values, ddof=1)) if len(values) > 1 else 0.0
    return RrssvReport(
        repeats=repeats,
        subset_size=subset_size,
        seed=seed,
        conditions=tuple(conditions),
        mean=mean,
        std=std,
        raw={k: v for k, v in raw.items() if v},
        error_count=error_count,
    )


# --- crop-ratio x resolution sweep ---

@dataclass(frozen=True)
class SweepFailure:
    crop_ratio: float
    resolution: int
    condition: str | None  # None when the whole cell failed
    message: str


@dataclass(frozen=True)
class SweepGrid:
    crop_ratios: tuple[float, ...]
    resolutions: tuple[int, ...]
    conditions: tuple[str, ...]
    cells: dict[tuple[float, int, str], float]  # (ratio, resolution, condition) -> Rank-1 IR
    failures: tuple[SweepFailure, ...] = field(default=())
    skipped: tuple[str, ...] = field(default=())  # image_ids without a face box


def sweep(
    manifest: Manifest,
    backend: EmbeddingBackend,
    crop_ratios: Sequence[float],
    resolutions: Sequence[int],
    input_size: int,
) -> SweepGrid:
    """Run the full pipeline for every (crop ratio, resolution) cell.

    Gallery images pass through the resolution bottleneck, probes do not.
    A failing cell is recorded and the sweep continues; determinism comes
    from iterating cells and records in fixed order.
    """
    if not crop_ratios or not resolutions:
        raise ValueError("sweep needs at least one crop ratio and one resolution")
    if backend.by_id:
        raise ValueError("sweep re-crops images per cell and needs an image backend")

    from .imaging import load_image

    usable = [rec for rec in manifest.records if rec.box is not None]
    skipped = tuple(rec.image_id for rec in manifest.records if rec.box is None)
    images = {rec.image_id: load_image(manifest.resolve_path(rec)) for rec in usable}
    condition_of = {rec.image_id: rec.condition for rec in manifest.probes}
    conditions = sorted({rec.condition for rec in manifest.probes if rec.box is not None})

    cells: dict[tuple[float, int, str], float] = {}
    failures: list[SweepFailure] = []
    for ratio in crop_ratios:
        for resolution in resolutions:
            try:
                entries = []
                for rec in usable:
                    staged = crop_to_input(images[rec.image_id], rec.box, ratio, input_size)
                    if rec.role == "gallery":
                        staged = gallery_bottleneck(staged, resolution, input_size)
                    entries.append((rec, backend(staged)))
                gallery = EmbeddingSet(
                    dim=backend.descriptor.dim,
                    entries=tuple(
                        _entry(rec, vec) for rec, vec in entries if rec.role == "gallery"
                    ),
                )
                probes = EmbeddingSet(
                    dim=backend.descriptor.dim,
                    entries=tuple(
                        _entry(rec, vec) for rec, vec in entries if rec.role == "probe"
                    ),
                )
                batch = identify_all(probes, build_gallery(gallery))
            except LrfrError as exc:
                failures.append(
                    SweepFailure(ratio, resolution, None, f"{type(exc).__name__}: {exc}")
                )
                continue
            grouped: dict[str, list[IdentificationResult]] = {}
            for res in batch.results:
                grouped.setdefault(condition_of[res.probe_image_id], []).append(res)
            for cond in conditions:
                subset = grouped.get(cond)
                if subset:
                    cells[(ratio, resolution, cond)] = rank_k_ir(subset, 1)
                else:
                    failures.append(
                        SweepFailure(ratio, resolution, cond, "no successful probes")
                    )
    return SweepGrid(
        crop_ratios=tuple(crop_ratios),
        resolutions=tuple(resolutions),
        conditions=tuple(conditions),
        cells=cells,
        failures=tuple(failures),
        skipped=skipped,
    )


def _entry(rec, vec):
    from .embedding import Embedding

    return Embedding(rec.image_id, rec.subject_id, vec)


# --- report CSV emitters (plot-ready, LF line endings, '#' provenance comments) ---

def _write_csv(path, comments: Sequence[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_report_csv(report: EvalReport, path, comments: Sequence[str] = ()) -> None:
    rows = []
    for cond, stats in report.per_condition.items():
        for k in sorted(stats.rank_ir):
            rows.append([cond, k, repr(stats.rank_ir[k])])
    for k in sorted(report.overall.rank_ir):
        rows.append([OVERALL, k, repr(report.overall.rank_ir[k])])
    _write_csv(path, comments, ("condition", "rank", "ir_percent"), rows)


def write_rrssv_csv(report: RrssvReport, path, comments: Sequence[str] = ()) -> None:
    header = ["condition", "mean", "std"] + [f"repeat_{i + 1}" for i in range(report.repeats)]
    rows = []
    for cond in [*report.conditions, OVERALL]:
        if cond not in report.raw:
            continue
        values = report.raw[cond]
        rows.append(
            [cond, repr(report.mean[cond]), repr(report.std[cond])] + [repr(v) for v in values]
        )
    _write_csv(path, comments, header, rows)


def write_sweep_csv(grid: SweepGrid, path, comments: Sequence[str] = ()) -> None:
    rows = []
    for ratio in grid.crop_ratios:
        for resolution in grid.resolutions:
            for cond in grid.conditions:
                key = (ratio, resolution, cond)
                if key in grid.cells:
                    rows.append([repr(ratio), resolution, cond, repr(grid.cells[key])])
    _write_csv(path, comments, ("crop_ratio", "resolution", "condition", "rank1_ir"), rows)
