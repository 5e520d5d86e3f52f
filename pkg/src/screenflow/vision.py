"""Pixel-level primitives: keypoints, binary descriptors, matching, homography.

The detector is a FAST-style segment test (9 contiguous circle pixels brighter
or darker than the center), descriptors are 256-bit binary patch comparisons
matched by Hamming distance, and geometry is estimated with RANSAC over
4-point DLT samples. Everything is a pure function of its inputs; RANSAC takes
an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from ._patch_pairs import AX, AY, BX, BY, PATCH_RADIUS
from .imageio import Image

# Bresenham circle of radius 3 as (dx, dy), clockwise from 12 o'clock.
_CIRCLE = np.array(
    [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
     (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)],
    dtype=np.int64,
)
_ARC_LEN = 9  # contiguous circle pixels required for a corner
_DETECT_MARGIN = PATCH_RADIUS + 1  # keep full descriptor patches inside the image
_CORNER_THRESHOLD = 20  # intensity delta for the segment test


@dataclass(frozen=True)
class FeatureSet:
    """Keypoints plus one 256-bit descriptor per keypoint.

    keypoints: (n, 3) float64 rows of (x, y, score), sorted by descending score.
    descriptors: (n, 32) uint8, each row a packed 256-bit vector.
    """

    keypoints: np.ndarray
    descriptors: np.ndarray
    source_size: tuple[int, int]

    def __post_init__(self):
        if len(self.keypoints) != len(self.descriptors):
            raise ValueError("keypoint/descriptor count mismatch")

    def __len__(self) -> int:
        return len(self.keypoints)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, FeatureSet)
            and self.source_size == other.source_size
            and np.array_equal(self.keypoints, other.keypoints)
            and np.array_equal(self.descriptors, other.descriptors)
        )


@dataclass(frozen=True)
class MatchSet:
    """Descriptor pairs surviving the ratio test: (index_a, index_b, hamming)."""

    pairs: list[tuple[int, int, int]]
    ratio_filtered: bool = True

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class Homography:
    """3x3 perspective transform, h[2][2] normalized to 1 unless degenerate."""

    h: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.h, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        if abs(m[2, 2]) > 1e-12:
            m = m / m[2, 2]
        object.__setattr__(self, "h", m)

    def is_degenerate(self) -> bool:
        return abs(np.linalg.det(self.h[:2, :2])) < 1e-12

    def inverse(self) -> "Homography":
        return Homography(_adjugate_3x3(self.h))

    def __eq__(self, other) -> bool:
        return isinstance(other, Homography) and np.array_equal(self.h, other.h)


@dataclass(frozen=True)
class MatchScore:
    """RANSAC confidence for one reference/frame pair."""

    inlier_ratio: float
    good_match_count: int
    homography: Optional[Homography] = None


@dataclass(frozen=True)
class TouchPoint:
    x: float
    y: float
    confidence: float
    source: str  # "color_marker" | "skin_threshold"


@dataclass(frozen=True)
class MarkerConfig:
    """Touchpoint thresholding setup.

    With mode "color_marker" the hue interval is caller-supplied; with
    "skin_threshold" the defaults below approximate commonly published HSV
    skin bounds. hue_lo > hue_hi means the interval wraps through 0.
    """

    mode: str = "color_marker"
    hue_lo: float = 100.0
    hue_hi: float = 140.0
    min_saturation: int = 90
    min_value: int = 70
    min_blob_area_px: int = 25

    @staticmethod
    def skin() -> "MarkerConfig":
        return MarkerConfig(
            mode="skin_threshold", hue_lo=340.0, hue_hi=50.0,
            min_saturation=59, min_value=89, min_blob_area_px=40,
        )


def _adjugate_3x3(m: np.ndarray) -> np.ndarray:
    # Elementwise inverse-up-to-scale; avoids LAPACK for determinism.
    a, b, c = m[0]
    d, e, f = m[1]
    g, h, i = m[2]
    return np.array(
        [
            [e * i - f * h, c * h - b * i, b * f - c * e],
            [f * g - d * i, a * i - c * g, c * d - a * f],
            [d * h - e * g, b * g - a * h, a * e - b * d],
        ],
        dtype=np.float64,
    )


def _box3(gray: np.ndarray) -> np.ndarray:
    """3x3 integer box blur with edge replication."""
    p = np.pad(gray.astype(np.uint32), 1, mode="edge")
    s = (
        p[:-2, :-2] + p[:-2, 1:-1] + p[:-2, 2:]
        + p[1:-1, :-2] + p[1:-1, 1:-1] + p[1:-1, 2:]
        + p[2:, :-2] + p[2:, 1:-1] + p[2:, 2:]
    )
    return ((s + 4) // 9).astype(np.uint8)


def _arc_lut() -> np.ndarray:
    """For each 16-bit circle mask: does it hold >= _ARC_LEN circular set bits?"""
    masks = np.arange(1 << 16, dtype=np.uint32)
    bits = ((masks[:, None] >> np.arange(16)[None, :]) & 1).astype(bool)
    ext = np.concatenate([bits, bits[:, : _ARC_LEN - 1]], axis=1)
    lut = np.zeros(1 << 16, dtype=bool)
    for s in range(16):
        lut |= ext[:, s : s + _ARC_LEN].all(axis=1)
    return lut


_ARC_LUT = _arc_lut()
_BIT_WEIGHTS = (1 << np.arange(16, dtype=np.uint16)).astype(np.uint16)


def extract_features(image: Image, max_keypoints: int = 400) -> FeatureSet:
    """Detect corners and compute packed 256-bit descriptors.

    Keypoints are sorted by descending corner score (ties broken by raster
    order) and truncated to max_keypoints. Deterministic for identical input.
    """
    if max_keypoints < 1:
        raise ValueError("max_keypoints must be >= 1")
    gray = image.gray()
    h, w = gray.shape
    m = _DETECT_MARGIN
    empty = FeatureSet(
        keypoints=np.zeros((0, 3), dtype=np.float64),
        descriptors=np.zeros((0, 32), dtype=np.uint8),
        source_size=(image.width, image.height),
    )
    if h <= 2 * m or w <= 2 * m:
        return empty

    t = _CORNER_THRESHOLD
    gi = gray.astype(np.int16)
    center = gi[m : h - m, m : w - m]
    ch, cw = center.shape
    hi = center + t
    lo = center - t
    bright_bits = np.zeros((ch, cw), dtype=np.uint16)
    dark_bits = np.zeros((ch, cw), dtype=np.uint16)
    for k, (dx, dy) in enumerate(_CIRCLE):
        shifted = gi[m + dy : m + dy + ch, m + dx : m + dx + cw]
        bright_bits |= (shifted > hi).astype(np.uint16) << k
        dark_bits |= (shifted < lo).astype(np.uint16) << k
    is_corner = _ARC_LUT[bright_bits] | _ARC_LUT[dark_bits]
    cys, cxs = np.nonzero(is_corner)
    if len(cys) == 0:
        return empty

    # Score (summed threshold excess of the stronger polarity), sparse at corners.
    c_at = center[cys, cxs].astype(np.int32)
    excess_b = np.zeros(len(cys), dtype=np.int32)
    excess_d = np.zeros(len(cys), dtype=np.int32)
    for dx, dy in _CIRCLE:
        d_at = gi[m + dy + cys, m + dx + cxs].astype(np.int32) - c_at
        excess_b += np.maximum(d_at - t, 0)
        excess_d += np.maximum(-d_at - t, 0)
    score = np.zeros((ch, cw), dtype=np.int32)
    score[cys, cxs] = np.maximum(excess_b, excess_d)

    # 3x3 non-max suppression; plateau pixels all survive, which only yields
    # adjacent near-duplicate keypoints with near-identical descriptors.
    local_max = ndimage.maximum_filter(score, size=3, mode="constant")
    keep = (score == local_max) & (score > 0)
    ys, xs = np.nonzero(keep)
    scores = score[ys, xs]

    order = np.lexsort((xs, ys, -scores))
    if len(order) > max_keypoints:
        order = order[:max_keypoints]
    xs = xs[order] + m
    ys = ys[order] + m
    scores = scores[order]

    smooth = _box3(gray)
    a_vals = smooth[ys[:, None] + AY[None, :], xs[:, None] + AX[None, :]]
    b_vals = smooth[ys[:, None] + BY[None, :], xs[:, None] + BX[None, :]]
    bits = (a_vals < b_vals).astype(np.uint8)
    descriptors = np.packbits(bits, axis=1)

    keypoints = np.stack(
        [xs.astype(np.float64), ys.astype(np.float64), scores.astype(np.float64)], axis=1
    )
    return FeatureSet(keypoints=keypoints, descriptors=descriptors,
                      source_size=(image.width, image.height))


def hamming_table(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise Hamming distances between packed descriptor rows, (na, nb) uint16."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros((len(a), len(b)), dtype=np.uint16)
    a64 = np.ascontiguousarray(a).view(np.uint64)
    b64 = np.ascontiguousarray(b).view(np.uint64)
    x = np.bitwise_xor(a64[:, None, :], b64[None, :, :])
    return np.bitwise_count(x).sum(axis=2, dtype=np.uint16)


def match_features(a: FeatureSet, b: FeatureSet, ratio_threshold: float = 0.75) -> MatchSet:
    """Exhaustive nearest-neighbor matching with Lowe's ratio test.

    For every descriptor in `a` the nearest and second-nearest descriptors in
    `b` are found by Hamming distance; the pair survives iff
    nearest < ratio_threshold * second_nearest. A sole descriptor in `b` has
    no second neighbor and always survives.
    """
    if not (0.0 < ratio_threshold <= 1.0):
        raise ValueError("ratio_threshold must be in (0, 1]")
    if len(a) == 0 or len(b) == 0:
        return MatchSet(pairs=[])

    d = hamming_table(a.descriptors, b.descriptors)
    idx1 = d.argmin(axis=1)
    rows = np.arange(len(a))
    d1 = d[rows, idx1].astype(np.float64)
    if len(b) == 1:
        keep = np.ones(len(a), dtype=bool)
    else:
        masked = d.astype(np.float64)
        masked[rows, idx1] = np.inf
        d2 = masked.min(axis=1)
        keep = d1 < ratio_threshold * d2
    pairs = [(int(i), int(idx1[i]), int(d1[i])) for i in rows[keep]]
    return MatchSet(pairs=pairs)


def estimate_homography(
    matches: MatchSet,
    a: FeatureSet,
    b: FeatureSet,
    reproj_threshold_px: float = 3.0,
    max_iters: int = 2000,
    confidence: float = 0.995,
    seed: int = 0,
) -> MatchScore:
    """RANSAC homography from matched keypoints of `a` onto `b`.

    Samples 4 matches per iteration, fits a DLT model, counts reprojection
    inliers, and adapts the iteration budget from the best consensus so far.
    The returned model is refit on all inliers of the winning sample;
    inlier_ratio is that consensus size over the number of good matches.
    Bit-deterministic for a fixed seed.
    """
    if reproj_threshold_px <= 0:
        raise ValueError("reproj_threshold_px must be > 0")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    n = len(matches.pairs)
    if n < 4:
        return MatchScore(inlier_ratio=0.0, good_match_count=n, homography=None)

    pairs = np.asarray(matches.pairs, dtype=np.int64)
    src = a.keypoints[pairs[:, 0], :2]
    dst = b.keypoints[pairs[:, 1], :2]

    rng = np.random.Generator(np.random.PCG64(seed))
    best_count = 0
    best_inliers: Optional[np.ndarray] = None
    best_h: Optional[np.ndarray] = None
    done = 0
    needed = max_iters
    chunk = 24  # grows geometrically; clean data converges within the first chunk
    src_h = np.concatenate([src, np.ones((n, 1))], axis=1)  # (n, 3)

    while done < min(needed, max_iters):
        size = min(chunk, max_iters - done)
        chunk = min(chunk * 3, 256)
        sample_idx = rng.random((size, n)).argpartition(3, axis=1)[:, :4]
        hs, valid = _dlt_batch(src[sample_idx], dst[sample_idx])
        if valid.any():
            proj = np.einsum("sij,nj->sni", hs, src_h)  # (size, n, 3)
            wv = proj[:, :, 2]
            safe = np.abs(wv) > 1e-12
            err = np.full((size, n), np.inf)
            px = np.where(safe, proj[:, :, 0] / np.where(safe, wv, 1.0), np.inf)
            py = np.where(safe, proj[:, :, 1] / np.where(safe, wv, 1.0), np.inf)
            err = np.hypot(px - dst[:, 0], py - dst[:, 1])
            err[~safe] = np.inf
            inl = err <= reproj_threshold_px
            counts = np.where(valid, inl.sum(axis=1), -1)
            k = int(counts.argmax())
            if counts[k] > best_count:
                best_count = int(counts[k])
                best_inliers = inl[k].copy()
                best_h = hs[k]
                w_in = best_count / n
                if w_in >= 1.0:
                    needed = done + 1
                elif w_in > 0:
                    denom = math.log(max(1e-12, 1.0 - w_in ** 4))
                    needed = min(max_iters, int(math.ceil(math.log(max(1e-12, 1.0 - confidence)) / denom)))
        done += size
        if best_count >= 4 and done >= needed:
            break

    if best_h is None or best_count < 4:
        return MatchScore(inlier_ratio=0.0, good_match_count=n, homography=None)

    refit = _dlt_single(src[best_inliers], dst[best_inliers])
    model = refit if refit is not None else best_h
    hom = Homography(model)
    if hom.is_degenerate():
        return MatchScore(inlier_ratio=0.0, good_match_count=n, homography=None)
    return MatchScore(inlier_ratio=best_count / n, good_match_count=n, homography=hom)


def _dlt_batch(src: np.ndarray, dst: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched 4-point DLT. src/dst: (s, 4, 2). Returns (s, 3, 3) and validity."""
    s = src.shape[0]
    x, y = src[:, :, 0], src[:, :, 1]
    xp, yp = dst[:, :, 0], dst[:, :, 1]
    zeros = np.zeros_like(x)
    ones = np.ones_like(x)
    r1 = np.stack([-x, -y, -ones, zeros, zeros, zeros, x * xp, y * xp, xp], axis=2)
    r2 = np.stack([zeros, zeros, zeros, -x, -y, -ones, x * yp, y * yp, yp], axis=2)
    A = np.concatenate([r1, r2], axis=1)  # (s, 8, 9)
    try:
        _, sv, vt = np.linalg.svd(A)
    except np.linalg.LinAlgError:
        return np.zeros((s, 3, 3)), np.zeros(s, dtype=bool)
    h = vt[:, -1, :].reshape(s, 3, 3)
    # Degenerate samples (collinear points) leave a rank-deficient system.
    valid = (sv[:, -2] > 1e-9) & (np.abs(h[:, 2, 2]) > 1e-12)
    det2 = h[:, 0, 0] * h[:, 1, 1] - h[:, 0, 1] * h[:, 1, 0]
    valid &= np.abs(det2) > 1e-15
    with np.errstate(divide="ignore", invalid="ignore"):
        h = h / np.where(np.abs(h[:, 2:3, 2:3]) > 1e-12, h[:, 2:3, 2:3], 1.0)
    return h, valid


def _dlt_single(src: np.ndarray, dst: np.ndarray) -> Optional[np.ndarray]:
    """DLT with Hartley normalization over >= 4 correspondences."""
    if len(src) < 4:
        return None
    ts, ns = _normalizer(src)
    td, nd = _normalizer(dst)
    x, y = ns[:, 0], ns[:, 1]
    xp, yp = nd[:, 0], nd[:, 1]
    zeros = np.zeros_like(x)
    ones = np.ones_like(x)
    r1 = np.stack([-x, -y, -ones, zeros, zeros, zeros, x * xp, y * xp, xp], axis=1)
    r2 = np.stack([zeros, zeros, zeros, -x, -y, -ones, x * yp, y * yp, yp], axis=1)
    A = np.concatenate([r1, r2], axis=0)
    try:
        # Smallest eigenvector of the 9x9 normal matrix; with Hartley
        # normalization this is well conditioned and much cheaper than a
        # full SVD of the (2n, 9) system.
        _, vecs = np.linalg.eigh(A.T @ A)
    except np.linalg.LinAlgError:
        return None
    hn = vecs[:, 0].reshape(3, 3)
    h = _adjugate_3x3(td) @ hn @ ts
    if abs(h[2, 2]) < 1e-12:
        return None
    return h / h[2, 2]


def _normalizer(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = pts.mean(axis=0)
    d = np.hypot(pts[:, 0] - c[0], pts[:, 1] - c[1]).mean()
    scale = math.sqrt(2.0) / d if d > 1e-12 else 1.0
    t = np.array([[scale, 0, -scale * c[0]], [0, scale, -scale * c[1]], [0, 0, 1.0]])
    normed = (pts - c) * scale
    return t, normed


def warp_point(h: Homography, p: tuple[float, float]) -> tuple[float, float]:
    """Perspective-project p through h; raises on points mapped to infinity."""
    x, y = p
    m = h.h
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) < 1e-12:
        raise ValueError("point at infinity")
    return (
        float((m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w),
        float((m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w),
    )


def rgb_to_hsv_arrays(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hue [0, 360), saturation [0, 255], value [0, 255] as float32 arrays."""
    r = rgb[:, :, 0].astype(np.float32)
    g = rgb[:, :, 1].astype(np.float32)
    b = rgb[:, :, 2].astype(np.float32)
    v = np.maximum(np.maximum(r, g), b)
    lo = np.minimum(np.minimum(r, g), b)
    c = v - lo
    with np.errstate(divide="ignore", invalid="ignore"):
        hr = np.where(c > 0, ((g - b) / c) % 6.0, 0.0)
        hg = np.where(c > 0, (b - r) / c + 2.0, 0.0)
        hb = np.where(c > 0, (r - g) / c + 4.0, 0.0)
        hue = 60.0 * np.where(v == r, hr, np.where(v == g, hg, hb))
        sat = np.where(v > 0, 255.0 * c / np.where(v > 0, v, 1.0), 0.0)
    return hue.astype(np.float32), sat.astype(np.float32), v


def detect_touchpoint(frame: Image, config: MarkerConfig) -> Optional[TouchPoint]:
    """Threshold the frame in HSV, pick the largest 4-connected blob centroid.

    Absence (no blob of at least min_blob_area_px pixels) is a valid result.
    """
    rgb = frame.array
    # Cheap integer prefilter: saturation*255 >= min_sat*value and value bound,
    # exact for the HSV definition below. Full hue math runs only on survivors.
    r16 = rgb[:, :, 0].astype(np.int32)
    g16 = rgb[:, :, 1].astype(np.int32)
    b16 = rgb[:, :, 2].astype(np.int32)
    v16 = np.maximum(np.maximum(r16, g16), b16)
    c16 = v16 - np.minimum(np.minimum(r16, g16), b16)
    # One saturation unit of slack keeps the prefilter a strict superset of
    # the float mask below.
    pre = (v16 >= config.min_value) & (255 * c16 >= (int(config.min_saturation) - 1) * v16)
    pys, pxs = np.nonzero(pre)
    if len(pys) == 0:
        return None
    # Exact HSV test evaluated only on prefilter survivors.
    r = r16[pys, pxs].astype(np.float32)
    g = g16[pys, pxs].astype(np.float32)
    b = b16[pys, pxs].astype(np.float32)
    v = v16[pys, pxs].astype(np.float32)
    c = c16[pys, pxs].astype(np.float32)
    safe_c = np.where(c > 0, c, 1.0)
    hue = np.where(
        c > 0,
        60.0 * np.where(v == r, ((g - b) / safe_c) % 6.0,
                        np.where(v == g, (b - r) / safe_c + 2.0, (r - g) / safe_c + 4.0)),
        0.0,
    ).astype(np.float32)
    sat = np.where(v > 0, 255.0 * c / np.where(v > 0, v, 1.0), 0.0).astype(np.float32)
    if config.hue_lo <= config.hue_hi:
        hue_ok = (hue >= config.hue_lo) & (hue <= config.hue_hi)
    else:  # wrapped interval, e.g. skin tones around 0 degrees
        hue_ok = (hue >= config.hue_lo) | (hue <= config.hue_hi)
    keep = hue_ok & (sat >= config.min_saturation) & (v >= config.min_value)
    if not keep.any():
        return None
    mask = np.zeros(rgb.shape[:2], dtype=bool)
    mask[pys[keep], pxs[keep]] = True

    labels, count = ndimage.label(mask)  # default structure = 4-connectivity
    if count == 0:
        return None
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    biggest = int(areas.argmax())
    area = int(areas[biggest])
    if area < config.min_blob_area_px:
        return None
    ys, xs = np.nonzero(labels == biggest)
    confidence = min(1.0, area / (2.0 * config.min_blob_area_px))
    return TouchPoint(
        x=float(xs.mean()), y=float(ys.mean()),
        confidence=confidence, source=config.mode,
    )
