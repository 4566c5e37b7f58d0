import numpy as np
import pytest
from PIL import Image

from adapter_helpers import center_detector, shy_detector, subject_pattern
from lrfr_adapter.detect import DetectorError, detect_rows, load_detector
from lrfr_adapter.formats import ManifestRow


def make_row(root, image_id, arr):
    path = root / f"{image_id}.png"
    Image.fromarray(arr).save(path)
    return ManifestRow(image_id, "s0", "probe", "d1", str(path))


def test_detect_fills_box_and_landmarks(tmp_path):
    rows = [make_row(tmp_path, "a", subject_pattern(0))]
    detected, failures = detect_rows(rows, center_detector)
    assert not failures
    assert len(detected) == 1
    row = detected[0]
    assert row.box is not None and len(row.box) == 4
    assert row.landmarks is not None and len(row.landmarks) == 5
    assert row.path == rows[0].path


def test_no_detection_emits_empty_box(tmp_path):
    dark = np.zeros((32, 32, 3), dtype=np.uint8)
    rows = [
        make_row(tmp_path, "bright", subject_pattern(1)),
        make_row(tmp_path, "dark", dark),
    ]
    detected, failures = detect_rows(rows, shy_detector)
    assert not failures
    assert detected[0].box is not None
    assert detected[1].box is None
    assert detected[1].landmarks is None


def test_failures_logged_not_fatal(tmp_path):
    good = make_row(tmp_path, "ok", subject_pattern(2))
    missing = ManifestRow("gone", "s0", "probe", "d1", str(tmp_path / "nothere.png"))
    detected, failures = detect_rows([missing, good], center_detector)
    assert [r.image_id for r in detected] == ["ok"]
    assert len(failures) == 1
    assert failures[0].image_id == "gone"
    assert failures[0].error == "ImageLoadError"


def test_detector_exception_reported(tmp_path):
    def angry(rgb):
        raise RuntimeError("boom")

    rows = [make_row(tmp_path, "a", subject_pattern(3))]
    detected, failures = detect_rows(rows, angry)
    assert detected == []
    assert failures[0].error == "RuntimeError"


def test_batch_count_preserved(tmp_path):
    arr = subject_pattern(4)
    path = tmp_path / "shared.png"
    Image.fromarray(arr).save(path)
    rows = [ManifestRow(f"p{i:04d}", f"s{i % 13}", "probe", "d1", str(path)) for i in range(195)]
    detected, failures = detect_rows(rows, center_detector)
    assert len(detected) == 195
    assert not failures
    assert [r.image_id for r in detected] == [r.image_id for r in rows]


def test_load_detector_specs():
    det = load_detector("python:adapter_helpers:center_detector")
    hit = det(subject_pattern(0))
    assert hit.box[2] > 0
    assert load_detector("center-box")(subject_pattern(0)).landmarks is not None
    with pytest.raises(DetectorError):
        load_detector("haar")
    with pytest.raises(DetectorError):
        load_detector("python:adapter_helpers:does_not_exist")
