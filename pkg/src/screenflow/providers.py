"""Screen-detection and text-extraction providers plus the frame relevance filter.

Three interchangeable backends exist for each provider:

* synthetic  - fed directly from simulator ground truth, fully deterministic
* fixture    - loaded once from a line-delimited record file keyed by frame id
* remote     - a thin HTTP client posting PNG bytes to a configured endpoint

Remote failures raise ProviderUnavailable; callers degrade to "no detections"
or feature-only identification.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .imageio import Image, png_bytes

DEFAULT_RELEVANT_LABELS = frozenset(
    {"electronics", "machine", "monitor", "screen", "kiosk", "appliance"}
)


class ProviderUnavailable(RuntimeError):
    """Raised when a remote provider cannot be reached."""


@dataclass(frozen=True)
class Rect:
    x: float
    y: float
    w: float
    h: float

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return self.w * self.h

    def to_list(self) -> list[float]:
        return [self.x, self.y, self.w, self.h]

    @staticmethod
    def from_list(v: Sequence[float]) -> "Rect":
        return Rect(float(v[0]), float(v[1]), float(v[2]), float(v[3]))


@dataclass(frozen=True)
class Detection:
    label: str
    confidence: float
    bbox: Optional[Rect] = None


@dataclass(frozen=True)
class OcrToken:
    text: str
    bbox: Rect
    confidence: float = 1.0


@dataclass(frozen=True)
class OcrResult:
    tokens: list[OcrToken]

    @property
    def full_text(self) -> str:
        return " ".join(t.text for t in self.tokens)


@dataclass(frozen=True)
class ScreenFilterResult:
    verdict: str  # "cropped" | "retained" | "discarded"
    screen_image: Optional[Image] = None
    screen_bbox: Optional[Rect] = None


def screen_filter(
    frame: Image,
    detections: list[Detection],
    relevant_labels: frozenset[str] = DEFAULT_RELEVANT_LABELS,
    area_fraction_min: float = 0.10,
    label_confidence_min: float = 0.55,
) -> ScreenFilterResult:
    """Decide whether a frame shows the interface, cropping when localized.

    A relevant detection whose box covers at least area_fraction_min of the
    frame wins and the frame is cropped to the largest such box. Otherwise a
    bbox-less relevant label at or above label_confidence_min retains the full
    frame. Anything else is discarded.
    """
    if not (0.0 < area_fraction_min < 1.0) or not (0.0 < label_confidence_min < 1.0):
        raise ValueError("thresholds must lie in (0, 1)")
    frame_area = float(frame.width * frame.height)
    relevant = [d for d in detections if d.label in relevant_labels]

    boxed = [
        d for d in relevant
        if d.bbox is not None and d.bbox.area() >= area_fraction_min * frame_area
    ]
    if boxed:
        best = max(boxed, key=lambda d: d.bbox.area())
        bb = _clip_rect(best.bbox, frame.width, frame.height)
        return ScreenFilterResult(
            verdict="cropped",
            screen_image=frame.crop(int(bb.x), int(bb.y), int(bb.w), int(bb.h)),
            screen_bbox=bb,
        )
    if any(d.bbox is None and d.confidence >= label_confidence_min for d in relevant):
        return ScreenFilterResult(verdict="retained")
    return ScreenFilterResult(verdict="discarded")


def _clip_rect(r: Rect, w: int, h: int) -> Rect:
    x0 = min(max(0.0, r.x), w - 1.0)
    y0 = min(max(0.0, r.y), h - 1.0)
    x1 = max(x0 + 1.0, min(float(w), r.x + r.w))
    y1 = max(y0 + 1.0, min(float(h), r.y + r.h))
    return Rect(float(int(x0)), float(int(y0)), float(int(x1 - int(x0))), float(int(y1 - int(y0))))


def lcs_length(a: str, b: str) -> int:
    """Longest-common-subsequence length via a rolling numpy DP row."""
    if not a or not b:
        return 0
    bn = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    prev = np.zeros(len(bn) + 1, dtype=np.int32)
    for ch in a:
        code = ord(ch)
        cur = np.empty_like(prev)
        cur[0] = 0
        match = prev[:-1] + (bn == code)
        np.maximum(match, prev[1:], out=cur[1:])
        np.maximum.accumulate(cur, out=cur)  # carry cur[j-1] forward
        prev = cur
    return int(prev[-1])


def text_similarity(a: str, b: str) -> float:
    """LCS length over the longer string's length; two empty strings match."""
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return lcs_length(a, b) / max(len(a), len(b))


def normalize_text(s: str) -> str:
    """Case-insensitive comparison form: lowercase, collapsed whitespace."""
    return " ".join(s.lower().split())


# --------------------------------------------------------------------------
# object-detection providers

class SyntheticObjectDetector:
    """Passes the simulator's ground-truth screen quad through as a detection."""

    def __init__(self, ground_truth):
        self._gt = ground_truth

    def detect(self, frame: Image, frame_id: Optional[int] = None) -> list[Detection]:
        rec = self._gt.record(frame_id) if frame_id is not None else None
        if rec is None:
            return []
        quad = np.asarray(rec.screen_quad, dtype=np.float64)
        x0, y0 = quad[:, 0].min(), quad[:, 1].min()
        x1, y1 = quad[:, 0].max(), quad[:, 1].max()
        bbox = Rect(float(x0), float(y0), float(x1 - x0), float(y1 - y0))
        return [Detection(label="electronics", confidence=1.0, bbox=bbox)]


class FixtureObjectDetector:
    """Detections keyed by frame id from a line-delimited record file."""

    def __init__(self, path: str | Path):
        self._records = _load_fixture_records(path)

    def detect(self, frame: Image, frame_id: Optional[int] = None) -> list[Detection]:
        rec = self._records.get(_fid(frame_id))
        if rec is None:
            return []
        out = []
        for d in rec.get("detections", []):
            bbox = Rect.from_list(d["bbox"]) if d.get("bbox") else None
            out.append(Detection(label=d["label"], confidence=float(d["confidence"]), bbox=bbox))
        return out


class RemoteObjectDetector:
    """POSTs the frame as PNG to a detection endpoint returning fixture records."""

    def __init__(self, url: str, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=10.0)

    def detect(self, frame: Image, frame_id: Optional[int] = None) -> list[Detection]:
        try:
            resp = self._client.post(self.url, content=png_bytes(frame),
                                     headers={"content-type": "image/png"})
            resp.raise_for_status()
        except Exception as exc:  # noqa: BLE001 - network failure taxonomy is httpx's
            raise ProviderUnavailable(f"object detection endpoint failed: {exc}") from exc
        rec = resp.json()
        out = []
        for d in rec.get("detections", []):
            bbox = Rect.from_list(d["bbox"]) if d.get("bbox") else None
            out.append(Detection(label=d["label"], confidence=float(d["confidence"]), bbox=bbox))
        return out


# --------------------------------------------------------------------------
# text-extraction providers

class SyntheticTextExtractor:
    """Returns the label strings of elements visible in the rendered state.

    Tokens come straight from ground truth in reading order (top-to-bottom,
    left-to-right by bbox position), so OCR quality is perfect by construction.
    """

    def __init__(self, ground_truth):
        self._gt = ground_truth

    def extract(self, image: Image, frame_id: Optional[int] = None) -> OcrResult:
        rec = self._gt.record(frame_id) if frame_id is not None else None
        if rec is None:
            return OcrResult(tokens=[])
        tokens = [
            OcrToken(text=label, bbox=Rect.from_list(bbox), confidence=1.0)
            for label, bbox in rec.visible_labels
        ]
        tokens.sort(key=lambda t: (t.bbox.y, t.bbox.x))
        return OcrResult(tokens=tokens)


class FixtureTextExtractor:
    """Tokens keyed by frame id, with optional seeded character noise.

    With noise_rate > 0 every character is independently substituted with the
    given probability; the substitution stream is a pure function of
    (seed, frame id) so outputs are reproducible.
    """

    _ALPHABET = string.ascii_lowercase + string.digits

    def __init__(self, path: str | Path, noise_rate: float = 0.0, seed: int = 0):
        self._records = _load_fixture_records(path)
        self.noise_rate = noise_rate
        self.seed = seed

    def extract(self, image: Image, frame_id: Optional[int] = None) -> OcrResult:
        rec = self._records.get(_fid(frame_id))
        if rec is None:
            return OcrResult(tokens=[])
        tokens = []
        for t in rec.get("tokens", []):
            text = t["text"]
            if self.noise_rate > 0:
                text = self._corrupt(text, frame_id)
            tokens.append(OcrToken(text=text, bbox=Rect.from_list(t["bbox"]),
                                   confidence=float(t.get("confidence", 1.0))))
        return OcrResult(tokens=tokens)

    def _corrupt(self, text: str, frame_id) -> str:
        rng = np.random.Generator(np.random.PCG64([self.seed, _int_fid(frame_id)]))
        chars = list(text)
        flips = rng.random(len(chars)) < self.noise_rate
        subs = rng.integers(0, len(self._ALPHABET), size=len(chars))
        for i, flip in enumerate(flips):
            if flip:
                chars[i] = self._ALPHABET[int(subs[i])]
        return "".join(chars)


class RemoteTextExtractor:
    """POSTs the image as PNG to an OCR endpoint returning fixture records."""

    def __init__(self, url: str, client=None):
        import httpx

        self.url = url
        self._client = client or httpx.Client(timeout=10.0)

    def extract(self, image: Image, frame_id: Optional[int] = None) -> OcrResult:
        try:
            resp = self._client.post(self.url, content=png_bytes(image),
                                     headers={"content-type": "image/png"})
            resp.raise_for_status()
        except Exception as exc:  # noqa: BLE001
            raise ProviderUnavailable(f"ocr endpoint failed: {exc}") from exc
        rec = resp.json()
        tokens = [
            OcrToken(text=t["text"], bbox=Rect.from_list(t["bbox"]),
                     confidence=float(t.get("confidence", 1.0)))
            for t in rec.get("tokens", [])
        ]
        return OcrResult(tokens=tokens)


def _fid(frame_id) -> str:
    return f"{int(frame_id):06d}" if frame_id is not None else ""


def _int_fid(frame_id) -> int:
    return int(frame_id) if frame_id is not None else 0


def _load_fixture_records(path: str | Path) -> dict[str, dict]:
    """One JSON record per line, keyed by frame_id. Loaded once, immutable."""
    records: dict[str, dict] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            records[str(rec["frame_id"])] = rec
    return records
