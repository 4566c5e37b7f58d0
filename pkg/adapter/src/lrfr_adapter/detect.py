"""Face detection producing manifest rows with boxes and five landmarks.

A detector is a callable taking an RGB uint8 array and returning the best
``Detection`` or None when no face is found. Detection failures never
abort a batch: hard errors are logged and reported per image, clean
no-detections are emitted as rows with empty box columns so downstream
stages can decide what to do with them.

Supported specs:

* ``mtcnn`` - five-landmark cascaded CNN detector via facenet-pytorch
  (optional dependency; its weights come with that package, nothing is
  vendored here).
* ``yunet:<model.onnx>`` - OpenCV FaceDetectorYN with a user-supplied
  model file; also returns five landmarks.
* ``python:<module>:<attr>`` - import your own detector.
* ``center-box`` - geometric placeholder covering the image center. It
  detects nothing; it exists so the full pipeline can be dry-run without
  any weights.
"""
from __future__ import annotations

import importlib
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .formats import ManifestRow
from .preprocess import ImageLoadError, load_rgb

log = logging.getLogger("lrfr_adapter.detect")


class DetectorError(Exception):
    """Detector could not be loaded."""


@dataclass(frozen=True)
class Detection:
    box: tuple[float, float, float, float]  # x, y, w, h
    landmarks: tuple[tuple[float, float], ...]  # eyes, nose, mouth corners


Detector = Callable[[np.ndarray], "Detection | None"]


@dataclass(frozen=True)
class DetectFailure:
    image_id: str
    error: str
    message: str


def _center_box(rgb: np.ndarray) -> Detection:
    h, w = rgb.shape[:2]
    bw, bh = 0.7 * w, 0.7 * h
    x, y = 0.15 * w, 0.15 * h
    landmarks = (
        (x + 0.30 * bw, y + 0.35 * bh),
        (x + 0.70 * bw, y + 0.35 * bh),
        (x + 0.50 * bw, y + 0.55 * bh),
        (x + 0.35 * bw, y + 0.75 * bh),
        (x + 0.65 * bw, y + 0.75 * bh),
    )
    return Detection(box=(x, y, bw, bh), landmarks=landmarks)


class MtcnnDetector:
    def __init__(self, device: str) -> None:
        try:
            from facenet_pytorch import MTCNN
        except ImportError as exc:
            raise DetectorError(
                "mtcnn needs facenet-pytorch installed (pip install lrfr-adapter[mtcnn])"
            ) from exc
        self._mtcnn = MTCNN(keep_all=False, device=device)

    def __call__(self, rgb: np.ndarray) -> Detection | None:
        boxes, probs, landmarks = self._mtcnn.detect(rgb, landmarks=True)
        if boxes is None or len(boxes) == 0:
            return None
        best = int(np.argmax(probs))
        x1, y1, x2, y2 = (float(v) for v in boxes[best])
        pts = tuple((float(px), float(py)) for px, py in landmarks[best])
        return Detection(box=(x1, y1, x2 - x1, y2 - y1), landmarks=pts)


class YuNetDetector:
    def __init__(self, model_path: str) -> None:
        try:
            import cv2
        except ImportError as exc:
            raise DetectorError("yunet needs opencv-python installed") from exc
        self._cv2 = cv2
        try:
            self._det = cv2.FaceDetectorYN_create(model_path, "", (0, 0))
        except cv2.error as exc:
            raise DetectorError(f"cannot load YuNet model {model_path}: {exc}") from exc

    def __call__(self, rgb: np.ndarray) -> Detection | None:
        h, w = rgb.shape[:2]
        self._det.setInputSize((w, h))
        _, faces = self._det.detect(rgb[:, :, ::-1])  # expects BGR
        if faces is None or len(faces) == 0:
            return None
        best = faces[int(np.argmax(faces[:, 14]))]
        x, y, bw, bh = (float(v) for v in best[:4])
        pts = tuple((float(best[4 + 2 * i]), float(best[5 + 2 * i])) for i in range(5))
        return Detection(box=(x, y, bw, bh), landmarks=pts)


def load_detector(spec: str, device: str = "cpu") -> Detector:
    kind, _, rest = spec.partition(":")
    if spec == "center-box":
        return _center_box
    if spec == "mtcnn":
        return MtcnnDetector(device)
    if kind == "yunet":
        return YuNetDetector(rest)
    if kind == "python":
        module_name, _, attr = rest.partition(":")
        try:
            obj = getattr(importlib.import_module(module_name), attr)
        except (ImportError, AttributeError) as exc:
            raise DetectorError(f"cannot import detector {spec!r}: {exc}") from exc
        return obj
    raise DetectorError(
        f"unknown detector spec {spec!r}; use mtcnn, yunet:<path>, "
        "python:<module>:<attr>, or center-box"
    )


def detect_rows(
    rows: Sequence[ManifestRow],
    detector: Detector,
) -> tuple[list[ManifestRow], list[DetectFailure]]:
    """Run detection over listing rows, filling box and landmark fields.

    Output keeps input order. No-detection rows come back with box and
    landmarks cleared; rows whose image cannot be processed are dropped
    from the output and reported as failures.
    """
    detected: list[ManifestRow] = []
    failures: list[DetectFailure] = []
    for row in rows:
        try:
            rgb = load_rgb(row.path)
            hit = detector(rgb)
        except Exception as exc:  # any per-image failure: log, report, keep going
            log.warning("detection failed for %s: %s", row.image_id, exc)
            failures.append(DetectFailure(row.image_id, type(exc).__name__, str(exc)))
            continue
        if hit is None:
            detected.append(
                ManifestRow(row.image_id, row.subject_id, row.role, row.condition, row.path)
            )
        else:
            detected.append(
                ManifestRow(
                    row.image_id, row.subject_id, row.role, row.condition, row.path,
                    box=hit.box, landmarks=hit.landmarks,
                )
            )
    return detected, failures
