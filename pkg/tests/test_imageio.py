"""Image container invariants and PNG/PPM round trips."""

import numpy as np
import pytest

from screenflow.imageio import Image, from_png_bytes, load_image, png_bytes, save_image


def test_image_shape_validation():
    with pytest.raises(ValueError):
        Image(np.zeros((4, 4), np.uint8))
    with pytest.raises(ValueError):
        Image(np.zeros((4, 4, 3), np.float32))
    with pytest.raises(ValueError):
        Image(np.zeros((0, 4, 3), np.uint8))


def test_gray_is_integer_luma():
    a = np.zeros((1, 2, 3), np.uint8)
    a[0, 0] = (255, 0, 0)
    a[0, 1] = (10, 200, 30)
    g = Image(a).gray()
    assert g[0, 0] == (77 * 255) >> 8
    assert g[0, 1] == (77 * 10 + 150 * 200 + 29 * 30) >> 8


def test_crop_bounds():
    img = Image(np.arange(4 * 6 * 3, dtype=np.uint8).reshape(4, 6, 3))
    sub = img.crop(1, 1, 3, 2)
    assert sub.width == 3 and sub.height == 2
    assert np.array_equal(sub.array, img.array[1:3, 1:4])
    with pytest.raises(ValueError):
        img.crop(4, 0, 5, 2)


@pytest.mark.parametrize("suffix", [".png", ".ppm"])
def test_save_load_roundtrip(tmp_path, suffix):
    rng = np.random.default_rng(3)
    img = Image(rng.integers(0, 256, size=(31, 17, 3)).astype(np.uint8))
    path = tmp_path / f"img{suffix}"
    save_image(img, path)
    assert load_image(path) == img


def test_ppm_header_is_p6(tmp_path):
    img = Image(np.full((2, 3, 3), 9, np.uint8))
    path = tmp_path / "x.ppm"
    save_image(img, path)
    data = path.read_bytes()
    assert data.startswith(b"P6\n3 2\n255\n")
    assert len(data) == len(b"P6\n3 2\n255\n") + 2 * 3 * 3


def test_png_bytes_roundtrip():
    rng = np.random.default_rng(4)
    img = Image(rng.integers(0, 256, size=(8, 8, 3)).astype(np.uint8))
    assert from_png_bytes(png_bytes(img)) == img
