import numpy as np
import pytest

from lrfr.errors import DecodeError, InvalidDims, UpscaleAsMatch
from lrfr.imaging import (
    ImageBuffer,
    load_image,
    match_resolution,
    resize,
    save_png,
    to_grayscale,
)


def random_image(rng, h, w, c=3):
    return ImageBuffer(rng.integers(0, 256, (h, w, c), dtype=np.uint8))


def test_identity_resize_is_byte_identical():
    rng = np.random.default_rng(0)
    img = random_image(rng, 224, 224)
    for kernel in ("area", "bilinear"):
        assert resize(img, 224, 224, kernel) == img


def test_constant_preserved_by_all_kernels():
    img = ImageBuffer(np.full((64, 64, 3), 100, dtype=np.uint8))
    for kernel in ("area", "bilinear", "bicubic"):
        for out_w, out_h in ((32, 32), (17, 41), (64, 64), (128, 96)):
            out = resize(img, out_w, out_h, kernel)
            assert (out.width, out.height) == (out_w, out_h)
            assert np.all(out.pixels == 100), kernel


def test_two_by_two_area_average_rounds_half_up():
    px = np.array([[[0], [0]], [[255], [255]]], dtype=np.uint8)
    out = resize(ImageBuffer(px), 1, 1, "area")
    assert out.pixels.ravel().tolist() == [128]  # 127.5 rounds half-up


def test_invalid_dims():
    img = ImageBuffer(np.zeros((4, 4, 1), dtype=np.uint8))
    with pytest.raises(InvalidDims):
        resize(img, 0, 4, "area")
    with pytest.raises(InvalidDims):
        resize(img, 4, -1, "bilinear")


def test_unknown_kernel():
    img = ImageBuffer(np.zeros((4, 4, 1), dtype=np.uint8))
    with pytest.raises(ValueError):
        resize(img, 2, 2, "lanczos")


def test_resize_deterministic():
    rng = np.random.default_rng(1)
    img = random_image(rng, 97, 55)
    for kernel in ("area", "bilinear", "bicubic"):
        a = resize(img, 31, 73, kernel)
        b = resize(img, 31, 73, kernel)
        assert a == b


def test_area_output_within_input_range():
    rng = np.random.default_rng(2)
    for _ in range(20):
        img = random_image(rng, int(rng.integers(2, 80)), int(rng.integers(2, 80)))
        out = resize(img, int(rng.integers(1, 90)), int(rng.integers(1, 90)), "area")
        assert out.pixels.min() >= img.pixels.min()
        assert out.pixels.max() <= img.pixels.max()


def test_integer_factor_area_matches_block_mean_oracle():
    # for integer factors the box filter is a block average; dyadic factors
    # are exact even in float32, factor 7 may sit one rounding step off
    rng = np.random.default_rng(3)
    for factor, slack in ((2, 0), (4, 0), (7, 1)):
        img = random_image(rng, 24 * factor, 17 * factor)
        h, w = img.height, img.width
        out = resize(img, w // factor, h // factor, "area")
        blocks = img.pixels.astype(np.float64).reshape(
            h // factor, factor, w // factor, factor, 3
        )
        oracle = np.floor(blocks.mean(axis=(1, 3)) + 0.5)
        diff = np.abs(out.pixels.astype(np.float64) - oracle)
        assert diff.max() <= slack, f"factor {factor}: max diff {diff.max()}"


def test_fractional_area_close_to_float64_oracle():
    rng = np.random.default_rng(4)
    img = random_image(rng, 50, 70)
    out = resize(img, 33, 21, "area")

    # independent overlap-weights oracle in float64
    def taps(n_in, n_out):
        s = n_in / n_out
        for i in range(n_out):
            lo, hi = i * s, min((i + 1) * s, n_in)
            ws = {}
            k = int(np.floor(lo))
            while k < hi:
                ws[k] = min(hi, k + 1) - max(lo, k)
                k += 1
            total = sum(ws.values())
            yield {k: v / total for k, v in ws.items()}

    src = img.pixels.astype(np.float64)
    tmp = np.zeros((50, 33, 3))
    for i, ws in enumerate(taps(70, 33)):
        for k, v in ws.items():
            tmp[:, i] += src[:, k] * v
    final = np.zeros((21, 33, 3))
    for i, ws in enumerate(taps(50, 21)):
        for k, v in ws.items():
            final[i] += tmp[k] * v
    oracle = np.floor(final + 0.5)
    assert np.max(np.abs(out.pixels.astype(np.float64) - oracle)) <= 1.0


def test_match_resolution_is_definitional_composition():
    rng = np.random.default_rng(5)
    for _ in range(10):
        img = random_image(rng, int(rng.integers(40, 200)), int(rng.integers(40, 200)))
        target = int(rng.integers(8, 40))
        input_size = int(rng.integers(64, 160))
        composed = resize(resize(img, target, target, "area"), input_size, input_size, "bicubic")
        assert match_resolution(img, target, input_size) == composed


def test_match_resolution_dims_and_identity():
    rng = np.random.default_rng(6)
    img = random_image(rng, 224, 224)
    out = match_resolution(img, 32, 224)
    assert (out.width, out.height) == (224, 224)
    # target == source dims == input size: both resizes are identities
    assert match_resolution(img, 224, 224) == img


def test_match_resolution_upscale_warns():
    img = ImageBuffer(np.zeros((16, 16, 3), dtype=np.uint8))
    with pytest.warns(UpscaleAsMatch):
        match_resolution(img, 32, 64)


def test_bottleneck_loss_monotone_on_natural_image(natural_image_path):
    img = load_image(natural_image_path)
    side = img.width
    mads = []
    for target in (24, 32, 40, 48, 64):
        out = match_resolution(img, target, side)
        mads.append(
            float(np.mean(np.abs(out.pixels.astype(np.float64) - img.pixels.astype(np.float64))))
        )
    assert all(a >= b for a, b in zip(mads, mads[1:])), mads


def test_grayscale_values():
    px = np.zeros((1, 3, 3), dtype=np.uint8)
    px[0, 0] = (255, 255, 255)
    px[0, 1] = (255, 0, 0)
    px[0, 2] = (0, 255, 0)
    out = to_grayscale(ImageBuffer(px))
    # 0.299*255 = 76.245 -> 76; 0.587*255 = 149.685 -> 150
    assert out.pixels.ravel().tolist() == [255, 76, 150]
    assert out.channels == 1


def test_grayscale_identity_for_single_channel():
    img = ImageBuffer(np.arange(16, dtype=np.uint8).reshape(4, 4, 1))
    assert to_grayscale(img) is img


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    for c in (1, 3):
        img = random_image(rng, 41, 33, c)
        path = tmp_path / f"rt{c}.png"
        save_png(img, path)
        assert load_image(path) == img


def test_png_save_deterministic(tmp_path):
    rng = np.random.default_rng(8)
    img = random_image(rng, 64, 64)
    save_png(img, tmp_path / "a.png")
    save_png(img, tmp_path / "b.png")
    assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()


def test_decode_error(tmp_path):
    bad = tmp_path / "bad.png"
    bad.write_bytes(b"definitely not an image")
    with pytest.raises(DecodeError):
        load_image(bad)


def test_jpeg_decodes(tmp_path):
    from PIL import Image

    rng = np.random.default_rng(9)
    arr = rng.integers(0, 256, (32, 32, 3), dtype=np.uint8)
    path = tmp_path / "x.jpg"
    Image.fromarray(arr).save(path, format="JPEG", quality=95)
    img = load_image(path)
    assert (img.width, img.height, img.channels) == (32, 32, 3)


def test_buffer_validation():
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((4, 4, 2), dtype=np.uint8))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((4, 4, 3), dtype=np.float32))
    with pytest.raises(ValueError):
        ImageBuffer(np.zeros((0, 4, 3), dtype=np.uint8))
