"""Correlation-distance nearest-neighbor identification.

The distance between feature vectors u and v is

    1 - ((u - mean(u)) . (v - mean(v))) / (||u - mean(u)|| ||v - mean(v)||)

i.e. one minus their Pearson correlation, lying in [0, 2] (clamped against
floating-point overshoot). Zero-variance vectors have no defined
correlation and are rejected as DegenerateEmbedding: a constant embedding
signals a broken backend, not a bad face.

All accumulation is in 64-bit floats even for float32 inputs; dim-2048 dot
products lose visible precision in 32-bit.

Identification is a brute-force full ranking of the gallery (ties broken
by subject_id); gallery sizes in watchlist protocols are small enough that
index structures would only add complexity, and CMC evaluation needs every
rank anyway.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .embedding import Embedding, EmbeddingSet
from .errors import DegenerateEmbedding, DimMismatch, DuplicateSubject, LrfrError


@dataclass(frozen=True)
class GalleryIndex:
    """Centered gallery vectors with precomputed norms, sorted by subject_id.

    ``norms_sq`` (the squared norms) is what the distance actually divides
    by, under a single square root; that keeps a self-match at exactly 0.0
    instead of one ulp off.
    """

    dim: int
    subjects: tuple[str, ...]
    centered: np.ndarray  # (n_subjects, dim) float64
    norms: np.ndarray  # (n_subjects,) float64
    norms_sq: np.ndarray  # (n_subjects,) float64

    def __len__(self) -> int:
        return len(self.subjects)


@dataclass(frozen=True)
class IdentificationResult:
    """Full gallery ranking for one probe, ascending by distance."""

    probe_image_id: str
    true_subject_id: str
    ranked: tuple[tuple[str, float], ...]

    def rank_of_truth(self) -> int:
        """1-based rank of the true subject in the ranking."""
        for i, (subject, _) in enumerate(self.ranked):
            if subject == self.true_subject_id:
                return i + 1
        raise ValueError(
            f"true subject {self.true_subject_id!r} absent from ranking "
            f"of probe {self.probe_image_id!r}"
        )


@dataclass(frozen=True)
class ProbeError:
    """Per-probe failure collected during batch identification."""

    probe_image_id: str
    error: str
    message: str


@dataclass(frozen=True)
class BatchIdentification:
    results: tuple[IdentificationResult, ...]
    errors: tuple[ProbeError, ...]


def _center(vec: np.ndarray) -> tuple[np.ndarray, float]:
    """Centered copy of ``vec`` and its squared L2 norm, both float64."""
    v = np.asarray(vec, dtype=np.float64)
    centered = v - v.mean()
    return centered, float(np.dot(centered, centered))


def correlation_distance(u, v) -> float:
    """Correlation distance between two vectors; see module docstring."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimMismatch(f"vectors must share one dimension, got {u.shape} and {v.shape}")
    uc, un_sq = _center(u)
    vc, vn_sq = _center(v)
    if un_sq == 0.0:
        raise DegenerateEmbedding("first vector has zero variance")
    if vn_sq == 0.0:
        raise DegenerateEmbedding("second vector has zero variance")
    dist = 1.0 - float(np.dot(uc, vc)) / math.sqrt(un_sq * vn_sq)
    return min(max(dist, 0.0), 2.0)


def build_gallery(eset: EmbeddingSet) -> GalleryIndex:
    """Center and norm every gallery vector; one entry per subject, sorted."""
    by_subject: dict[str, Embedding] = {}
    for e in eset.entries:
        if e.subject_id in by_subject:
            raise DuplicateSubject(f"two gallery embeddings for subject {e.subject_id!r}")
        by_subject[e.subject_id] = e

    subjects = tuple(sorted(by_subject))
    centered = np.empty((len(subjects), eset.dim), dtype=np.float64)
    norms_sq = np.empty(len(subjects), dtype=np.float64)
    for i, subject in enumerate(subjects):
        c, n_sq = _center(by_subject[subject].vector)
        if n_sq == 0.0:
            raise DegenerateEmbedding(f"gallery vector for subject {subject!r} has zero variance")
        centered[i] = c
        norms_sq[i] = n_sq
    return GalleryIndex(
        dim=eset.dim,
        subjects=subjects,
        centered=centered,
        norms=np.sqrt(norms_sq),
        norms_sq=norms_sq,
    )


def identify(probe: Embedding, gallery: GalleryIndex) -> IdentificationResult:
    """Rank every gallery subject against one probe, nearest first.

    Stable sort over distances with subjects pre-sorted lexicographically
    gives the deterministic tie-break: equal distances rank by subject_id.
    The per-subject dot products use the same reduction as the norm
    precomputation, so identical vectors score exactly 0.0.
    """
    if probe.vector.shape != (gallery.dim,):
        raise DimMismatch(
            f"probe {probe.image_id!r} has dim {probe.vector.shape[0]}, gallery dim {gallery.dim}"
        )
    pc, pn_sq = _center(probe.vector)
    if pn_sq == 0.0:
        raise DegenerateEmbedding(f"probe {probe.image_id!r} has zero variance")
    dists = np.empty(len(gallery.subjects), dtype=np.float64)
    for i in range(len(gallery.subjects)):
        dists[i] = 1.0 - np.dot(gallery.centered[i], pc) / math.sqrt(gallery.norms_sq[i] * pn_sq)
    np.clip(dists, 0.0, 2.0, out=dists)
    order = np.argsort(dists, kind="stable")
    ranked = tuple((gallery.subjects[i], float(dists[i])) for i in order)
    return IdentificationResult(
        probe_image_id=probe.image_id,
        true_subject_id=probe.subject_id,
        ranked=ranked,
    )


def identify_all(probes: EmbeddingSet, gallery: GalleryIndex) -> BatchIdentification:
    """Identify every probe; per-probe failures are collected, not raised.

    Result order equals probe input order, and each result is exactly what
    a standalone identify call would produce.
    """
    results: list[IdentificationResult] = []
    errors: list[ProbeError] = []
    for probe in probes.entries:
        try:
            results.append(identify(probe, gallery))
        except (DimMismatch, DegenerateEmbedding) as exc:
            errors.append(ProbeError(probe.image_id, type(exc).__name__, str(exc)))
    return BatchIdentification(results=tuple(results), errors=tuple(errors))


RESULTS_HEADER = ("probe_image_id", "true_subject_id", "rank", "subject_id", "distance")


def write_results_csv(
    results: Sequence[IdentificationResult],
    path,
    comments: Sequence[str] = (),
) -> None:
    """One row per (probe, rank); distances printed with 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for res in results:
            for rank, (subject, distance) in enumerate(res.ranked, start=1):
                writer.writerow(
                    [res.probe_image_id, res.true_subject_id, rank, subject, f"{distance:.9g}"]
                )


def read_results_csv(path) -> list[IdentificationResult]:
    """Parse a results CSV back into full rankings, preserving probe order."""
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    except OSError as exc:
        raise LrfrError(f"cannot read results file {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != RESULTS_HEADER:
        raise LrfrError(f"{path}: expected results header {','.join(RESULTS_HEADER)}")

    order: list[str] = []
    truth: dict[str, str] = {}
    ranked: dict[str, list[tuple[int, str, float]]] = {}
    for row in rows[1:]:
        if len(row) != len(RESULTS_HEADER):
            raise LrfrError(f"{path}: bad results row {row!r}")
        probe_id, true_subject, rank_s, subject, distance_s = row
        if probe_id not in ranked:
            order.append(probe_id)
            truth[probe_id] = true_subject
            ranked[probe_id] = []
        try:
            ranked[probe_id].append((int(rank_s), subject, float(distance_s)))
        except ValueError:
            raise LrfrError(f"{path}: bad rank or distance in row {row!r}") from None

    results = []
    for probe_id in order:
        entries = sorted(ranked[probe_id])
        if [r for r, _, _ in entries] != list(range(1, len(entries) + 1)):
            raise LrfrError(f"{path}: ranks for probe {probe_id!r} are not contiguous from 1")
        results.append(
            IdentificationResult(
                probe_image_id=probe_id,
                true_subject_id=truth[probe_id],
                ranked=tuple((s, d) for _, s, d in entries),
            )
        )
    return results
