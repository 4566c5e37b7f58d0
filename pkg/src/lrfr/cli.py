"""Command-line front end for the identification pipeline.

Subcommands mirror the pipeline stages::

    prepare   crop faces (box x crop-ratio) and resize to the model input
    matchres  pass gallery images through a resolution bottleneck
    embed     run an embedding backend over a manifest
    identify  rank probe embeddings against a gallery embedding file
    evaluate  Rank-k IR report from identification results
    rrssv     repeated random sub-sampling validation of Rank-1 IR
    sweep     crop-ratio x resolution grid of Rank-1 IR

Every option can also come from a ``--config`` file of ``key=value`` lines
(keys mirror flag names without the leading dashes); explicit flags win.
Reports embed a provenance header (version, config hash, seed) as ``#``
comment lines. Outputs are deterministic: identical inputs and options
produce byte-identical files, for any ``--jobs`` value.

Exit codes: 0 success, 1 pipeline failure (details on stderr and in the
per-item error CSV), 2 usage error.
"""
from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import ImageRecord, Manifest, load_manifest, write_manifest
from .embedding import Embedding, EmbeddingSet, read_embeddings, resolve_backend, write_embeddings
from .errors import LrfrError
from .evaluation import (
    build_report,
    rrssv,
    sweep,
    write_report_csv,
    write_rrssv_csv,
    write_sweep_csv,
)
from .imaging import load_image
from .matcher import build_gallery, identify_all, read_results_csv, write_results_csv
from .pipeline import (
    StageOutcome,
    default_jobs,
    embed_task,
    map_ordered,
    matchres_task,
    prepare_task,
    safe_image_filename,
    staged_path,
)

OUTCOME_HEADER = "image_id,stage,error,message"


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated descriptor of one pipeline run.

    Subcommands fill in the fields they use; construction enforces the
    cross-field invariants so bad values die as usage errors before any
    stage runs.
    """

    manifest: str
    out: str
    backend: str = "reference"
    crop_ratio: float = 1.0
    target_resolution: int | None = None
    input_size: int = 112
    seed: int = 0
    ranks: tuple[int, ...] = (1,)

    def __post_init__(self) -> None:
        if not self.crop_ratio > 0:
            _usage_error(f"crop-ratio must be > 0, got {self.crop_ratio}")
        if self.input_size < 1:
            _usage_error(f"input-size must be >= 1, got {self.input_size}")
        if self.target_resolution is not None and self.target_resolution < 1:
            _usage_error(f"target must be >= 1, got {self.target_resolution}")
        if list(self.ranks) != sorted(self.ranks) or any(k < 1 for k in self.ranks):
            _usage_error(f"ranks must be ascending positive integers, got {list(self.ranks)}")


def _usage_error(message: str) -> None:
    print(f"lrfr: {message}", file=sys.stderr)
    raise SystemExit(2)


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    config: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _usage_error(f"cannot read config file {path}: {exc}")
    for line_num, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            _usage_error(f"config {path} line {line_num}: expected key=value")
        key, _, value = line.partition("=")
        config[key.strip()] = value.strip()
    return config


class Options:
    """Flags layered over config-file values layered over defaults."""

    # options that do not change computed content and stay out of the hash
    _NON_SEMANTIC = ("out", "jobs", "config")

    def __init__(self, args: argparse.Namespace) -> None:
        self._args = args
        self._config = _load_config(getattr(args, "config", None))
        self.resolved: dict[str, str] = {}

    def get(self, key: str, cast=str, default=None, required: bool = False):
        value = getattr(self._args, key.replace("-", "_"), None)
        if value is None and key in self._config:
            value = cast(self._config[key])
        if value is None:
            value = default
        if value is None and required:
            _usage_error(f"missing required option --{key} (flag or config)")
        if value is not None and key not in self._NON_SEMANTIC:
            self.resolved[key] = str(value)
        return value

    def jobs(self) -> int:
        return self.get("jobs", int, default_jobs())

    def provenance(self, seed: int | None = None) -> list[str]:
        blob = "\n".join(f"{k}={v}" for k, v in sorted(self.resolved.items()))
        digest = hashlib.sha256(blob.encode("utf-8")).hexdigest()
        return [
            f"lrfr-version {__version__}",
            f"config-hash {digest}",
            f"seed {seed if seed is not None else 'none'}",
        ]


def _write_outcomes(path: Path, outcomes: list[StageOutcome], stage: str) -> None:
    lines = [OUTCOME_HEADER]
    for o in outcomes:
        msg = o.message.replace('"', "'")
        lines.append(f'{o.image_id},{stage},{o.error},"{msg}"')
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


# --- subcommands ---

def cmd_prepare(opts: Options) -> int:
    config = ExperimentConfig(
        manifest=opts.get("manifest", required=True),
        out=opts.get("out", required=True),
        crop_ratio=opts.get("crop-ratio", float, 1.0),
        input_size=opts.get("input-size", int, required=True),
    )
    manifest = load_manifest(config.manifest)
    out_dir = Path(config.out)
    jobs = opts.jobs()
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    tasks = []
    for rec in manifest.records:
        box = (rec.box.x, rec.box.y, rec.box.w, rec.box.h) if rec.box else None
        tasks.append(
            (rec.image_id, str(manifest.resolve_path(rec)), str(staged_path(out_dir, rec)),
             box, config.crop_ratio, config.input_size)
        )
    outcomes = map_ordered(prepare_task, tasks, jobs)

    staged_records = []
    for rec, outcome in zip(manifest.records, outcomes):
        if outcome.status == "ok":
            staged_records.append(
                ImageRecord(rec.image_id, rec.subject_id, rec.role, rec.condition,
                            f"images/{safe_image_filename(rec.image_id)}")
            )
    write_manifest(Manifest(name="manifest", records=tuple(staged_records)),
                   out_dir / "manifest.csv")
    _write_outcomes(out_dir / "skipped.csv",
                    [o for o in outcomes if o.status == "skipped"], "prepare")
    errors = [o for o in outcomes if o.status == "error"]
    _write_outcomes(out_dir / "errors.csv", errors, "prepare")
    return 1 if errors else 0


def cmd_matchres(opts: Options) -> int:
    config = ExperimentConfig(
        manifest=opts.get("manifest", required=True),
        out=opts.get("out", required=True),
        target_resolution=opts.get("target", int, required=True),
        input_size=opts.get("input-size", int, required=True),
    )
    manifest = load_manifest(config.manifest)
    out_dir = Path(config.out)
    jobs = opts.jobs()
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    gallery = manifest.gallery
    tasks = [
        (rec.image_id, str(manifest.resolve_path(rec)), str(staged_path(out_dir, rec)),
         config.target_resolution, config.input_size)
        for rec in gallery
    ]
    outcomes = map_ordered(matchres_task, tasks, jobs)
    ok_gallery = {rec.image_id for rec, o in zip(gallery, outcomes) if o.status == "ok"}

    staged_records = []
    for rec in manifest.records:
        if rec.role == "gallery":
            if rec.image_id in ok_gallery:
                staged_records.append(
                    ImageRecord(rec.image_id, rec.subject_id, rec.role, rec.condition,
                                f"images/{safe_image_filename(rec.image_id)}")
                )
        else:
            staged_records.append(
                ImageRecord(rec.image_id, rec.subject_id, rec.role, rec.condition,
                            str(manifest.resolve_path(rec)), rec.box, rec.landmarks)
            )
    write_manifest(Manifest(name="manifest", records=tuple(staged_records)),
                   out_dir / "manifest.csv")
    errors = [o for o in outcomes if o.status == "error"]
    _write_outcomes(out_dir / "errors.csv", errors, "matchres")
    return 1 if errors else 0


def cmd_embed(opts: Options) -> int:
    manifest = load_manifest(opts.get("manifest", required=True))
    backend_name = opts.get("backend", default="reference")
    out_dir = Path(opts.get("out", required=True))
    jobs = opts.jobs()
    out_dir.mkdir(parents=True, exist_ok=True)
    backend = resolve_backend(backend_name)

    if not backend.by_id and jobs > 1:
        tasks = [
            (rec.image_id, str(manifest.resolve_path(rec)), backend_name)
            for rec in manifest.records
        ]
        raw = map_ordered(embed_task, tasks, jobs)
    else:
        raw = []
        for rec in manifest.records:
            try:
                arg = rec.image_id if backend.by_id else load_image(manifest.resolve_path(rec))
                raw.append((StageOutcome(rec.image_id, "ok"), backend(arg).tobytes()))
            except LrfrError as exc:
                raw.append(
                    (StageOutcome(rec.image_id, "error", type(exc).__name__, str(exc)), None)
                )

    entries: dict[str, list[Embedding]] = {"gallery": [], "probe": []}
    failures: list[StageOutcome] = []
    for rec, (outcome, blob) in zip(manifest.records, raw):
        if outcome.status != "ok":
            failures.append(outcome)
            continue
        vector = np.frombuffer(blob, dtype="<f4")
        entries[rec.role].append(Embedding(rec.image_id, rec.subject_id, vector))

    dim = backend.descriptor.dim
    write_embeddings(EmbeddingSet(dim=dim, entries=tuple(entries["gallery"]),
                                  backend=backend.descriptor), out_dir / "gallery.emb")
    write_embeddings(EmbeddingSet(dim=dim, entries=tuple(entries["probe"]),
                                  backend=backend.descriptor), out_dir / "probes.emb")
    _write_outcomes(out_dir / "errors.csv", failures, "embed")
    return 1 if failures else 0


def cmd_identify(opts: Options) -> int:
    gallery_set = read_embeddings(opts.get("gallery", required=True))
    probe_set = read_embeddings(opts.get("probes", required=True))
    out_path = Path(opts.get("out", required=True))
    out_path.parent.mkdir(parents=True, exist_ok=True)

    batch = identify_all(probe_set, build_gallery(gallery_set))
    write_results_csv(batch.results, out_path, comments=opts.provenance())
    error_path = out_path.with_suffix(".errors.csv")
    _write_outcomes(
        error_path,
        [StageOutcome(e.probe_image_id, "error", e.error, e.message) for e in batch.errors],
        "identify",
    )
    return 1 if batch.errors else 0


def cmd_evaluate(opts: Options) -> int:
    results_path = opts.get("results", required=True)
    ranks_spec = opts.get("ranks", default="1")
    results = read_results_csv(results_path)
    gallery_size = len(results[0].ranked) if results else 0
    ranks = (
        list(range(1, gallery_size + 1)) if ranks_spec == "all" else _int_list(ranks_spec)
    )
    config = ExperimentConfig(
        manifest=opts.get("manifest", required=True),
        out=opts.get("out", required=True),
        ranks=tuple(ranks),
    )
    manifest = load_manifest(config.manifest)
    out_path = Path(config.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    condition_of = {rec.image_id: rec.condition for rec in manifest.probes}
    error_counts: dict[str, int] = {}
    errors_path = opts.get("errors")
    if errors_path:
        try:
            error_lines = Path(errors_path).read_text(encoding="utf-8").splitlines()[1:]
        except OSError as exc:
            raise LrfrError(f"cannot read errors file {errors_path}: {exc}") from exc
        for line in error_lines:
            if not line.strip():
                continue
            image_id = line.split(",", 1)[0]
            cond = condition_of.get(image_id, "unknown")
            error_counts[cond] = error_counts.get(cond, 0) + 1

    report = build_report(results, condition_of, ranks, error_counts)
    write_report_csv(report, out_path, comments=opts.provenance())
    return 0


def _rrssv_inputs(opts: Options) -> tuple[Manifest, EmbeddingSet, EmbeddingSet]:
    results_dir = opts.get("results-dir")
    base = Path(results_dir) if results_dir else None
    manifest_path = opts.get("manifest", default=str(base / "manifest.csv") if base else None,
                             required=True)
    gallery_path = opts.get("gallery", default=str(base / "gallery.emb") if base else None,
                            required=True)
    probes_path = opts.get("probes", default=str(base / "probes.emb") if base else None,
                           required=True)
    return (load_manifest(manifest_path), read_embeddings(gallery_path),
            read_embeddings(probes_path))


def cmd_rrssv(opts: Options) -> int:
    manifest, gallery_set, probe_set = _rrssv_inputs(opts)
    subset = opts.get("subset", int, required=True)
    repeats = opts.get("repeats", int, 10)
    seed = opts.get("seed", int, 0)
    out_path = Path(opts.get("out", required=True))
    out_path.parent.mkdir(parents=True, exist_ok=True)

    report = rrssv(manifest, gallery_set, probe_set, subset, repeats, seed)
    write_rrssv_csv(report, out_path, comments=opts.provenance(seed))
    return 0


def cmd_sweep(opts: Options) -> int:
    config = ExperimentConfig(
        manifest=opts.get("manifest", required=True),
        out=opts.get("out", required=True),
        backend=opts.get("backend", default="reference"),
        input_size=opts.get("input-size", int, required=True),
    )
    ratios = _float_list(opts.get("ratios", default="1.0,1.1,1.2,1.3,1.35,1.4"))
    resolutions = _int_list(opts.get("resolutions", default="24,32,40,48,64"))
    for ratio in ratios:
        if not ratio > 0:
            _usage_error(f"ratios must be > 0, got {ratio}")
    for resolution in resolutions:
        if resolution < 1:
            _usage_error(f"resolutions must be >= 1, got {resolution}")
    manifest = load_manifest(config.manifest)
    backend = resolve_backend(config.backend)
    out_path = Path(config.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    grid = sweep(manifest, backend, ratios, resolutions, config.input_size)
    write_sweep_csv(grid, out_path, comments=opts.provenance())
    failure_lines = ["crop_ratio,resolution,condition,message"]
    for f in grid.failures:
        cond = f.condition if f.condition is not None else "*"
        failure_lines.append(f'{f.crop_ratio!r},{f.resolution},{cond},"{f.message}"')
    out_path.with_suffix(".failures.csv").write_text(
        "\n".join(failure_lines) + "\n", encoding="utf-8"
    )
    return 1 if any(f.condition is None for f in grid.failures) else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrfr",
        description="Low-resolution face identification pipeline toolkit",
    )
    parser.add_argument("--version", action="version", version=f"lrfr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value option file; explicit flags win")
        p.add_argument("--jobs", type=int, help="workers for data-parallel stages "
                                                "(default: $LRFR_JOBS or 1)")
        p.add_argument("--out", help="output file or directory")

    p = sub.add_parser("prepare", help="crop faces and resize to the model input size")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--crop-ratio", type=float)
    p.add_argument("--input-size", type=int)
    p.set_defaults(fn=cmd_prepare)

    p = sub.add_parser("matchres", help="resolution-match gallery images")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--target", type=int)
    p.add_argument("--input-size", type=int)
    p.set_defaults(fn=cmd_matchres)

    p = sub.add_parser("embed", help="embed manifest images with a backend")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--backend")
    p.set_defaults(fn=cmd_embed)

    p = sub.add_parser("identify", help="rank probes against a gallery")
    common(p)
    p.add_argument("--gallery")
    p.add_argument("--probes")
    p.set_defaults(fn=cmd_identify)

    p = sub.add_parser("evaluate", help="Rank-k IR report from results")
    common(p)
    p.add_argument("--results")
    p.add_argument("--manifest")
    p.add_argument("--ranks", help="comma list of ranks, or 'all' for the full CMC")
    p.add_argument("--errors", help="per-item error CSV to fold into error counts")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("rrssv", help="repeated random sub-sampling validation")
    common(p)
    p.add_argument("--results-dir", help="directory with manifest.csv, gallery.emb, probes.emb")
    p.add_argument("--manifest")
    p.add_argument("--gallery")
    p.add_argument("--probes")
    p.add_argument("--subset", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_rrssv)

    p = sub.add_parser("sweep", help="crop-ratio x resolution Rank-1 IR grid")
    common(p)
    p.add_argument("--manifest")
    p.add_argument("--backend")
    p.add_argument("--ratios", help="comma list of crop ratios")
    p.add_argument("--resolutions", help="comma list of bottleneck resolutions")
    p.add_argument("--input-size", type=int)
    p.set_defaults(fn=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(Options(args))
    except LrfrError as exc:
        print(f"LRFR-ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
