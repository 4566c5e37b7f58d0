"""Command line for the adapter: detect faces, export embeddings.

Both commands read and write the lrfr toolkit's file formats, so a full
run needs no glue code:

    lrfr-adapter detect --listing raw.csv --detector mtcnn --out manifest.csv
    lrfr prepare  --manifest manifest.csv --crop-ratio 1.3 --input-size 112 --out prep/
    lrfr matchres --manifest prep/manifest.csv --target 32 --input-size 112 --out mr/
    lrfr-adapter embed --manifest mr/manifest.csv --model torchscript:model.pt \
        --input-size 112 --role gallery --out gallery.emb
    lrfr-adapter embed --manifest mr/manifest.csv --model torchscript:model.pt \
        --input-size 112 --role probe --out probes.emb
    lrfr identify --gallery gallery.emb --probes probes.emb --out results.csv
    lrfr evaluate --results results.csv --manifest manifest.csv --ranks 1 --out report.csv

The listing passed to detect uses the manifest header with empty box and
landmark columns; detect fills them in.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import AdapterConfig
from .detect import DetectorError, detect_rows, load_detector
from .export import embed_and_export
from .formats import read_manifest_rows, resolve_row_paths, write_manifest_rows
from .models import ModelError

FAILURE_HEADER = "image_id,stage,error,message"


def _write_failures(path: Path, failures, stage: str) -> None:
    lines = [FAILURE_HEADER]
    for f in failures:
        lines.append(f'{f.image_id},{stage},{f.error},"{f.message}"'.replace("\n", " "))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_detect(args: argparse.Namespace) -> int:
    rows = resolve_row_paths(read_manifest_rows(args.listing), Path(args.listing).resolve().parent)
    detector = load_detector(args.detector, args.device)
    detected, failures = detect_rows(rows, detector)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest_rows(detected, out)
    _write_failures(out.with_suffix(".errors.csv"), failures, "detect")
    boxless = sum(1 for r in detected if r.box is None)
    logging.info(
        "detect: %d rows, %d without detection, %d failures",
        len(detected), boxless, len(failures),
    )
    return 1 if failures else 0


def cmd_embed(args: argparse.Namespace) -> int:
    rows = resolve_row_paths(read_manifest_rows(args.manifest), Path(args.manifest).resolve().parent)
    if args.role != "all":
        rows = [r for r in rows if r.role == args.role]
    config = AdapterConfig(
        model=args.model,
        input_size=args.input_size,
        normalization=args.normalization,
        device=args.device,
        batch_size=args.batch_size,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    summary = embed_and_export(rows, config, out)
    _write_failures(out.with_suffix(".errors.csv"), summary.failures, "embed")
    logging.info("embed: %d vectors, dim %d, %d failures",
                 summary.count, summary.dim, len(summary.failures))
    return 1 if summary.failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrfr-adapter",
        description="Face detection and deep-model embedding export for the lrfr toolkit",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="fill face boxes and landmarks into a listing CSV")
    p.add_argument("--listing", required=True, help="manifest-format CSV, box columns may be empty")
    p.add_argument("--detector", default="mtcnn",
                   help="mtcnn | yunet:<model.onnx> | python:<module>:<attr> | center-box")
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="output manifest CSV")
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("embed", help="embed manifest images and write an .emb file")
    p.add_argument("--manifest", required=True)
    p.add_argument("--model", required=True,
                   help="torchscript:<path> | onnx:<path> | python:<module>:<attr> | stub:<dim>")
    p.add_argument("--input-size", type=int, required=True)
    p.add_argument("--normalization", default="center-scale", choices=["center-scale", "none"])
    p.add_argument("--role", default="all", choices=["all", "gallery", "probe"])
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default="cpu")
    p.add_argument("--out", required=True, help="output embedding file")
    p.set_defaults(fn=cmd_embed)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.fn(args)
    except (DetectorError, ModelError, ValueError, OSError) as exc:
        print(f"LRFR-ADAPTER-ERROR {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
