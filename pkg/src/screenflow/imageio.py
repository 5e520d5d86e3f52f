"""RGB image container plus PNG / raw PPM (P6) load and save."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


@dataclass(frozen=True)
class Image:
    """8-bit RGB image, row-major (height, width, 3) uint8 array.

    Grayscale is derived on demand with an integer luma so the conversion is
    bit-exact across platforms: (77*R + 150*G + 29*B) >> 8.
    """

    array: np.ndarray
    _gray_cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.array)
        if a.ndim != 3 or a.shape[2] != 3 or a.dtype != np.uint8:
            raise ValueError(f"expected (h, w, 3) uint8 array, got {a.shape} {a.dtype}")
        if a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "array", np.ascontiguousarray(a))

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    def gray(self) -> np.ndarray:
        """Integer-luma grayscale, shape (h, w) uint8."""
        if not self._gray_cache:
            a = self.array.astype(np.uint32)
            g = (77 * a[:, :, 0] + 150 * a[:, :, 1] + 29 * a[:, :, 2]) >> 8
            self._gray_cache.append(g.astype(np.uint8))
        return self._gray_cache[0]

    def crop(self, x: int, y: int, w: int, h: int) -> "Image":
        if w < 1 or h < 1 or x < 0 or y < 0 or x + w > self.width or y + h > self.height:
            raise ValueError(f"crop ({x},{y},{w},{h}) outside {self.width}x{self.height}")
        return Image(self.array[y : y + h, x : x + w].copy())

    def __eq__(self, other) -> bool:
        return isinstance(other, Image) and np.array_equal(self.array, other.array)


def load_image(path: str | Path) -> Image:
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return _load_ppm(path.read_bytes())
    with PILImage.open(path) as im:
        return Image(np.asarray(im.convert("RGB"), dtype=np.uint8))


def save_image(img: Image, path: str | Path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        path.write_bytes(_dump_ppm(img))
    else:
        PILImage.fromarray(img.array, mode="RGB").save(path, format="PNG")


def png_bytes(img: Image) -> bytes:
    buf = io.BytesIO()
    PILImage.fromarray(img.array, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def from_png_bytes(data: bytes) -> Image:
    with PILImage.open(io.BytesIO(data)) as im:
        return Image(np.asarray(im.convert("RGB"), dtype=np.uint8))


def _dump_ppm(img: Image) -> bytes:
    header = f"P6\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.array.tobytes()


def _load_ppm(data: bytes) -> Image:
    # P6 header: magic, width, height, maxval, then binary pixel data.
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P6":
        raise ValueError("not a P6 ppm file")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"unsupported ppm maxval {maxval}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return Image(pixels.reshape(h, w, 3).copy())
