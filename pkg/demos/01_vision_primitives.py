# Keypoints, binary descriptors, matching and RANSAC on synthetic images.
#
# Run from the repo root:  python3 demos/01_vision_primitives.py

import numpy as np

from screenflow import (
    Image,
    MarkerConfig,
    detect_touchpoint,
    estimate_homography,
    extract_features,
    match_features,
)

# A black canvas with one bright square: its four corners are the only
# structure, so the detector should find exactly those.
canvas = np.zeros((64, 64, 3), np.uint8)
canvas[28:36, 28:36] = 255
img = Image(canvas)

features = extract_features(img, max_keypoints=50)
print(f"keypoints on the square: {len(features)}")
for x, y, score in features.keypoints:
    print(f"  corner at ({x:.0f}, {y:.0f}) score={score:.0f}")

# Translate the square and match: every descriptor should find its twin at
# Hamming distance zero.
shifted = np.zeros((64, 64, 3), np.uint8)
shifted[33:41, 33:41] = 255
features_b = extract_features(Image(shifted), max_keypoints=50)
matches = match_features(features, features_b, ratio_threshold=0.75)
print(f"\nmatches after translating by (5, 5): {matches.pairs}")

# RANSAC recovers the translation as a homography.
score = estimate_homography(matches, features, features_b, seed=1)
print(f"\ninlier ratio: {score.inlier_ratio:.2f} over {score.good_match_count} matches")
print("recovered transform:")
print(np.round(score.homography.h, 3))

# Touchpoint detection: drop a green marker blob and find its centroid.
canvas2 = np.full((64, 64, 3), 70, np.uint8)
canvas2[30:40, 20:30] = (0, 230, 40)
tp = detect_touchpoint(Image(canvas2), MarkerConfig())
print(f"\nmarker found at ({tp.x:.1f}, {tp.y:.1f}) confidence={tp.confidence:.2f}")
