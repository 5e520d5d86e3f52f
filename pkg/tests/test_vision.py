"""Vision primitives against independent oracles: an exhaustive corner scan,
a brute-force matcher, analytic homographies, and painted-pixel centroids."""

import numpy as np
import pytest

from screenflow.imageio import Image
from screenflow.vision import (
    Homography,
    MarkerConfig,
    MatchSet,
    detect_touchpoint,
    estimate_homography,
    extract_features,
    hamming_table,
    match_features,
    warp_point,
)


def gray_image(value=128, size=64):
    return Image(np.full((size, size, 3), value, np.uint8))


def square_image(x0=28, y0=28, side=8, size=64):
    a = np.zeros((size, size, 3), np.uint8)
    a[y0 : y0 + side, x0 : x0 + side] = 255
    return Image(a)


def random_featureset(rng, n, size=200):
    from screenflow.vision import FeatureSet

    kps = np.stack([
        rng.uniform(20, size - 20, n),
        rng.uniform(20, size - 20, n),
        rng.uniform(1, 100, n),
    ], axis=1)
    descs = rng.integers(0, 256, size=(n, 32)).astype(np.uint8)
    return FeatureSet(keypoints=kps, descriptors=descs, source_size=(size, size))


# -- extract_features -------------------------------------------------------


def test_uniform_image_has_no_keypoints():
    assert len(extract_features(gray_image(), 400)) == 0


def oracle_corner_positions(img: Image, threshold=20, arc=9):
    """Exhaustive per-pixel segment test over the whole image."""
    circle = [(0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
              (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3)]
    g = img.gray().astype(int)
    h, w = g.shape
    out = []
    for y in range(16, h - 16):
        for x in range(16, w - 16):
            c = g[y, x]
            flags_b = [g[y + dy, x + dx] > c + threshold for dx, dy in circle]
            flags_d = [g[y + dy, x + dx] < c - threshold for dx, dy in circle]
            for flags in (flags_b, flags_d):
                doubled = flags + flags
                run = best = 0
                for f in doubled:
                    run = run + 1 if f else 0
                    best = max(best, run)
                if best >= arc:
                    out.append((x, y))
                    break
    return out


def test_white_square_corners_found_near_oracle():
    img = square_image()
    fs = extract_features(img, 400)
    assert len(fs) >= 4
    oracle = oracle_corner_positions(img)
    assert oracle, "oracle finds corner responses"
    true_corners = [(28, 28), (35, 28), (28, 35), (35, 35)]
    for tx, ty in true_corners:
        best = min(abs(k[0] - tx) + abs(k[1] - ty) for k in fs.keypoints)
        assert best <= 3
    # every reported keypoint is an oracle corner response
    oracle_set = set(oracle)
    for x, y, _ in fs.keypoints:
        assert (int(x), int(y)) in oracle_set


def test_translation_shifts_keypoints_exactly():
    a = square_image(28, 28)
    b = square_image(33, 33)
    fa = extract_features(a, 400)
    fb = extract_features(b, 400)
    assert len(fa) == len(fb)
    shifted = {(x + 5, y + 5) for x, y, _ in fa.keypoints}
    got = {(x, y) for x, y, _ in fb.keypoints}
    assert shifted == got
    # descriptors at corresponding keypoints are identical (Hamming 0)
    matches = match_features(fa, fb, 0.75)
    assert len(matches.pairs) == len(fa)
    assert all(d == 0 for _, _, d in matches.pairs)


def test_extract_rejects_bad_max():
    with pytest.raises(ValueError):
        extract_features(gray_image(), 0)


def test_extract_deterministic(coffee_stream):
    frames, _ = coffee_stream
    a = extract_features(frames[0], 300)
    b = extract_features(frames[0], 300)
    assert a == b


# -- match_features ---------------------------------------------------------


def oracle_match(a, b, ratio):
    """Spec-literal brute force: nearest and second-nearest by Hamming."""
    pairs = []
    for i in range(len(a)):
        dists = []
        for j in range(len(b)):
            d = int(bin(int.from_bytes(a.descriptors[i].tobytes(), "big")
                        ^ int.from_bytes(b.descriptors[j].tobytes(), "big")).count("1"))
            dists.append((d, j))
        dists_sorted = sorted(range(len(dists)), key=lambda j: (dists[j][0], j))
        j1 = dists_sorted[0]
        d1 = dists[j1][0]
        if len(b) == 1:
            pairs.append((i, j1, d1))
            continue
        d2 = min(dists[j][0] for j in dists_sorted[1:])
        if d1 < ratio * d2:
            pairs.append((i, j1, d1))
    return pairs


def test_identity_match():
    rng = np.random.default_rng(1)
    fs = random_featureset(rng, 12)
    got = match_features(fs, fs, 0.75)
    assert len(got.pairs) == 12
    assert all(i == j and d == 0 for i, j, d in got.pairs)


def test_empty_inputs():
    rng = np.random.default_rng(2)
    fs = random_featureset(rng, 5)
    empty = random_featureset(rng, 0)
    assert match_features(fs, empty, 0.75).pairs == []
    assert match_features(empty, fs, 0.75).pairs == []


def test_bitflipped_complements_do_not_match():
    rng = np.random.default_rng(3)
    fs = random_featureset(rng, 10)
    from screenflow.vision import FeatureSet

    flipped = FeatureSet(keypoints=fs.keypoints.copy(),
                         descriptors=np.bitwise_not(fs.descriptors),
                         source_size=fs.source_size)
    got = match_features(fs, flipped, 0.75)
    assert got.pairs == oracle_match(fs, flipped, 0.75)


def test_matcher_equals_bruteforce_oracle_100_pairs():
    rng = np.random.default_rng(42)
    for _ in range(100):
        na, nb = int(rng.integers(1, 24)), int(rng.integers(1, 24))
        a = random_featureset(rng, na)
        b = random_featureset(rng, nb)
        got = match_features(a, b, 0.75)
        assert got.pairs == oracle_match(a, b, 0.75)


def test_ratio_threshold_validation():
    rng = np.random.default_rng(4)
    fs = random_featureset(rng, 3)
    with pytest.raises(ValueError):
        match_features(fs, fs, 0.0)
    with pytest.raises(ValueError):
        match_features(fs, fs, 1.5)


# -- estimate_homography -----------------------------------------------------


def correspondence_sets(rng, n, h_true):
    from screenflow.vision import FeatureSet

    src = np.stack([rng.uniform(10, 190, n), rng.uniform(10, 190, n)], axis=1)
    hom = Homography(h_true)
    dst = np.array([warp_point(hom, (x, y)) for x, y in src])
    descs = rng.integers(0, 256, size=(n, 32)).astype(np.uint8)
    fa = FeatureSet(keypoints=np.concatenate([src, np.ones((n, 1))], axis=1),
                    descriptors=descs, source_size=(200, 200))
    fb = FeatureSet(keypoints=np.concatenate([dst, np.ones((n, 1))], axis=1),
                    descriptors=descs, source_size=(200, 200))
    matches = MatchSet(pairs=[(i, i, 0) for i in range(n)])
    return fa, fb, matches


def corner_error(h_got, h_true, size=200):
    ha, hb = Homography(h_got), Homography(h_true)
    worst = 0.0
    for p in [(0, 0), (size, 0), (size, size), (0, size)]:
        ax, ay = warp_point(ha, p)
        bx, by = warp_point(hb, p)
        worst = max(worst, np.hypot(ax - bx, ay - by))
    return worst


def test_identity_homography_exact():
    rng = np.random.default_rng(5)
    fa, fb, matches = correspondence_sets(rng, 20, np.eye(3))
    score = estimate_homography(matches, fa, fb, 3.0, 2000, 0.995, seed=1)
    assert score.inlier_ratio == 1.0
    assert score.good_match_count == 20
    assert np.abs(score.homography.h - np.eye(3)).max() < 1e-6


def test_known_transform_recovered():
    h_true = np.array([[1.2, 0.0, 10.0], [0.0, 1.2, -4.0], [0.0, 0.0, 1.0]])
    rng = np.random.default_rng(6)
    fa, fb, matches = correspondence_sets(rng, 20, h_true)
    score = estimate_homography(matches, fa, fb, 3.0, 2000, 0.995, seed=2)
    assert score.homography is not None
    assert corner_error(score.homography.h, h_true) < 0.5


def test_ransac_with_outliers_monte_carlo():
    h_true = np.array([[1.1, 0.02, 8.0], [-0.01, 0.95, 12.0], [1e-4, -5e-5, 1.0]])
    successes = 0
    for trial in range(100):
        rng = np.random.default_rng(1000 + trial)
        fa, fb, _ = correspondence_sets(rng, 12, h_true)
        from screenflow.vision import FeatureSet

        n_out = 8
        out_src = np.stack([rng.uniform(10, 190, n_out), rng.uniform(10, 190, n_out)], axis=1)
        out_dst = np.stack([rng.uniform(10, 190, n_out), rng.uniform(10, 190, n_out)], axis=1)
        kps_a = np.concatenate([fa.keypoints,
                                np.concatenate([out_src, np.ones((n_out, 1))], axis=1)])
        kps_b = np.concatenate([fb.keypoints,
                                np.concatenate([out_dst, np.ones((n_out, 1))], axis=1)])
        descs = np.zeros((20, 32), np.uint8)
        fa2 = FeatureSet(keypoints=kps_a, descriptors=descs, source_size=(200, 200))
        fb2 = FeatureSet(keypoints=kps_b, descriptors=descs, source_size=(200, 200))
        matches = MatchSet(pairs=[(i, i, 0) for i in range(20)])
        score = estimate_homography(matches, fa2, fb2, 2.0, 2000, 0.995, seed=trial)
        if (score.homography is not None and score.inlier_ratio >= 12 / 20
                and corner_error(score.homography.h, h_true) < 2.0):
            successes += 1
    assert successes >= 99


def test_too_few_matches_yield_no_model():
    rng = np.random.default_rng(7)
    fa, fb, _ = correspondence_sets(rng, 3, np.eye(3))
    score = estimate_homography(MatchSet(pairs=[(i, i, 0) for i in range(3)]),
                                fa, fb, 3.0, 100, 0.995, seed=1)
    assert score.homography is None
    assert score.inlier_ratio == 0.0
    assert score.good_match_count == 3


def test_ransac_seed_determinism():
    h_true = np.array([[1.05, 0.01, 4.0], [0.0, 1.0, 2.0], [0.0, 0.0, 1.0]])
    rng = np.random.default_rng(8)
    fa, fb, matches = correspondence_sets(rng, 16, h_true)
    a = estimate_homography(matches, fa, fb, 3.0, 500, 0.995, seed=9)
    b = estimate_homography(matches, fa, fb, 3.0, 500, 0.995, seed=9)
    assert a.inlier_ratio == b.inlier_ratio
    assert np.array_equal(a.homography.h, b.homography.h)


def test_collinear_sample_not_fatal():
    from screenflow.vision import FeatureSet

    # all points on one line: every sample is degenerate, no model
    n = 10
    xs = np.linspace(20, 180, n)
    kps = np.stack([xs, xs, np.ones(n)], axis=1)
    fs = FeatureSet(keypoints=kps, descriptors=np.zeros((n, 32), np.uint8),
                    source_size=(200, 200))
    score = estimate_homography(MatchSet(pairs=[(i, i, 0) for i in range(n)]),
                                fs, fs, 3.0, 200, 0.995, seed=3)
    # degenerate geometry either yields no model or a rank-deficient one is rejected
    assert score.good_match_count == n


# -- warp_point ---------------------------------------------------------------


def test_warp_identity_and_translation():
    assert warp_point(Homography(np.eye(3)), (3, 7)) == (3.0, 7.0)
    t = np.array([[1, 0, 10], [0, 1, -4], [0, 0, 1]], dtype=float)
    assert warp_point(Homography(t), (0, 0)) == (10.0, -4.0)


def test_warp_projective_matches_direct_multiplication():
    h = np.array([[1.1, 0.2, 5.0], [-0.1, 0.9, 3.0], [2e-4, 1e-4, 1.0]])
    x, y = 50.0, 50.0
    v = h @ np.array([x, y, 1.0])
    expect = (v[0] / v[2], v[1] / v[2])
    got = warp_point(Homography(h), (x, y))
    assert got == pytest.approx(expect, abs=1e-12)


def test_warp_point_at_infinity_errors():
    h = np.array([[1.0, 0, 0], [0, 1.0, 0], [0, -1.0, 0]])
    hom = Homography.__new__(Homography)
    object.__setattr__(hom, "h", h)
    with pytest.raises(ValueError, match="infinity"):
        warp_point(hom, (5.0, 0.0))


def test_warp_roundtrip_through_inverse():
    rng = np.random.default_rng(11)
    h = np.array([[1.2, 0.05, 12.0], [-0.03, 0.98, -6.0], [3e-4, -2e-4, 1.0]])
    hom = Homography(h)
    inv = hom.inverse()
    for _ in range(50):
        p = (float(rng.uniform(0, 300)), float(rng.uniform(0, 300)))
        q = warp_point(hom, p)
        back = warp_point(inv, q)
        assert back == pytest.approx(p, abs=1e-6)


# -- detect_touchpoint ---------------------------------------------------------


GREEN = (0, 230, 40)


def test_no_inrange_pixels_is_absent():
    img = gray_image(100)
    assert detect_touchpoint(img, MarkerConfig()) is None


def paint_block(a, x0, y0, w, h, color=GREEN):
    a[y0 : y0 + h, x0 : x0 + w] = color


def oracle_centroid(a):
    """Centroid of painted green pixels."""
    ys, xs = np.nonzero((a[:, :, 1] > 200) & (a[:, :, 0] < 100))
    return float(xs.mean()), float(ys.mean())


def test_green_block_centroid():
    a = np.zeros((64, 64, 3), np.uint8)
    paint_block(a, 27, 27, 10, 10)
    tp = detect_touchpoint(Image(a), MarkerConfig(min_blob_area_px=25))
    ox, oy = oracle_centroid(a)
    assert tp is not None
    assert abs(tp.x - ox) <= 1 and abs(tp.y - oy) <= 1
    assert abs(tp.x - 32) <= 1 and abs(tp.y - 32) <= 1
    assert tp.confidence == 1.0
    assert tp.source == "color_marker"


def oracle_components(mask):
    """Pure-python 4-connectivity labeling."""
    h, w = mask.shape
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for y in range(h):
        for x in range(w):
            if mask[y, x] and not seen[y, x]:
                stack = [(y, x)]
                seen[y, x] = True
                pix = []
                while stack:
                    cy, cx = stack.pop()
                    pix.append((cy, cx))
                    for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                        if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            stack.append((ny, nx))
                comps.append(pix)
    return comps


def test_largest_blob_wins():
    a = np.zeros((64, 64, 3), np.uint8)
    paint_block(a, 5, 5, 10, 10)   # area 100
    paint_block(a, 40, 40, 6, 5)   # area 30
    tp = detect_touchpoint(Image(a), MarkerConfig(min_blob_area_px=25))
    mask = (a[:, :, 1] > 200)
    comps = oracle_components(mask)
    big = max(comps, key=len)
    ex = float(np.mean([p[1] for p in big]))
    ey = float(np.mean([p[0] for p in big]))
    assert tp is not None
    assert (tp.x, tp.y) == pytest.approx((ex, ey), abs=1e-9)


def test_small_blob_below_min_area_absent():
    a = np.zeros((64, 64, 3), np.uint8)
    paint_block(a, 5, 5, 4, 4)
    assert detect_touchpoint(Image(a), MarkerConfig(min_blob_area_px=25)) is None


def test_confidence_clamps():
    a = np.zeros((64, 64, 3), np.uint8)
    paint_block(a, 5, 5, 6, 6)  # area 36, min 25 -> conf 36/50
    tp = detect_touchpoint(Image(a), MarkerConfig(min_blob_area_px=25))
    assert tp.confidence == pytest.approx(36 / 50)


def test_skin_threshold_mode_wraps_hue():
    a = np.zeros((64, 64, 3), np.uint8)
    a[20:30, 20:30] = (200, 120, 90)  # skin-ish, hue ~16
    tp = detect_touchpoint(Image(a), MarkerConfig.skin())
    assert tp is not None
    assert tp.source == "skin_threshold"


# -- inlier ratio bounds -------------------------------------------------------


def test_match_score_invariants(coffee_stream, fixture_config):
    frames, _ = coffee_stream
    fa = extract_features(frames[0], 200)
    fb = extract_features(frames[40], 200)
    ms = match_features(fa, fb, 0.75)
    sc = estimate_homography(ms, fa, fb, 3.0, 256, 0.995, seed=3)
    assert 0.0 <= sc.inlier_ratio <= 1.0
    assert sc.good_match_count == len(ms.pairs)
    assert sc.good_match_count >= round(sc.inlier_ratio * sc.good_match_count)


def test_hamming_table_range():
    rng = np.random.default_rng(12)
    a = rng.integers(0, 256, size=(6, 32)).astype(np.uint8)
    b = rng.integers(0, 256, size=(9, 32)).astype(np.uint8)
    d = hamming_table(a, b)
    assert d.shape == (6, 9)
    assert d.min() >= 0 and d.max() <= 256
