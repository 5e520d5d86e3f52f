"""Committed sampling pattern for the 256-bit binary patch descriptor.

256 point pairs inside a 31x31 patch, coordinates in [-15, 15] relative to
the keypoint center. Generated once from a fixed seed and frozen here so the
descriptor is bit-identical on every platform and numpy version.
"""

import numpy as np

# fmt: off
PAIR_TABLE = (
    (-6,-11,6,15), (7,-9,-4,4), (-9,0,-9,-12), (-2,9,-8,-14), (-5,5,-7,-12), (2,-3,-10,-1), (5,-14,3,5), (-8,3,-8,2),
    (12,-11,2,-14), (-5,-2,14,2), (12,14,-13,3), (8,-8,-3,2), (2,8,9,-5), (8,2,-13,-1), (6,15,12,1), (-1,-6,-3,7),
    (12,-10,4,-1), (3,12,13,11), (-2,-1,-2,14), (-3,-12,-7,3), (6,-4,11,8), (-6,14,5,0), (-7,-4,-11,4), (5,10,8,-14),
    (-5,3,-8,3), (6,-15,-14,-13), (-3,-2,4,-10), (-11,1,-12,15), (15,12,-12,-12), (12,-5,11,9), (-9,-11,13,4), (8,14,-6,-12),
    (-14,-13,10,-15), (-1,11,6,-14), (-9,-15,0,-6), (13,10,-3,2), (-2,5,0,-13), (15,-9,8,0), (-12,10,-4,-3), (-6,4,5,-10),
    (10,-14,13,-3), (7,-3,14,-6), (-10,14,-13,0), (0,-10,9,-10), (-9,6,-7,-1), (-13,-5,3,12), (-4,-5,2,0), (-5,-15,-11,1),
    (0,1,7,-4), (6,7,-13,15), (-13,9,-1,1), (-15,-11,-4,12), (-11,0,-1,-12), (-12,13,-4,0), (2,-15,12,-13), (10,-14,-2,-13),
    (4,-7,14,3), (-3,10,15,2), (-3,-11,1,-1), (-11,-15,-7,3), (1,2,-14,1), (7,-1,-6,-15), (9,14,-3,8), (-13,-12,12,0),
    (-7,-5,-6,14), (5,-5,-7,9), (-14,6,-5,2), (-7,7,10,-12), (-10,10,7,0), (7,6,-9,15), (5,-7,-15,-6), (-12,-13,6,7),
    (14,-14,-5,-4), (-6,6,-10,-11), (4,10,-1,7), (-12,7,6,-7), (6,3,-15,-10), (-4,12,9,-5), (15,-15,4,1), (-12,12,-7,-12),
    (-7,-5,-12,13), (14,7,13,15), (7,2,13,-2), (-10,-4,-4,13), (3,-15,-14,-7), (-7,-11,11,-4), (-14,-15,-4,-4), (8,5,-1,-10),
    (4,0,-10,-14), (-6,10,3,14), (-11,4,-11,0), (14,-15,7,3), (3,8,3,9), (6,3,1,13), (4,12,-13,-13), (-3,4,1,-10),
    (-12,-3,11,-2), (-7,11,3,15), (11,-7,-14,2), (-7,-14,-13,2), (-8,3,14,-7), (14,8,5,-5), (5,2,-3,15), (-11,-13,-3,-10),
    (-5,3,-2,0), (2,10,10,-8), (15,13,10,9), (-7,15,-14,10), (8,6,14,8), (15,3,9,10), (-14,-8,-1,-11), (9,6,-14,-7),
    (1,-4,8,-12), (3,15,7,-7), (-11,14,-8,-15), (14,0,-3,-6), (-14,-7,15,15), (-3,-11,-4,4), (-8,2,-8,7), (4,10,10,9),
    (-3,10,-6,-5), (11,15,-14,1), (-2,-15,-5,3), (14,8,-12,3), (15,15,-4,7), (-13,-3,-9,-10), (6,-11,10,9), (13,3,-13,6),
    (13,2,-7,2), (9,4,13,6), (-1,6,-6,14), (-6,13,-4,-8), (10,1,-12,-13), (7,-3,3,4), (2,-13,-6,6), (14,3,10,-8),
    (-2,-6,-1,12), (11,-4,8,-7), (15,-3,-5,11), (-14,-1,-12,3), (6,-15,-15,-3), (4,-15,12,-15), (-4,-2,-6,8), (-10,-5,3,9),
    (12,15,12,-2), (-2,12,9,4), (0,-4,8,-7), (-3,-9,-3,9), (-5,7,12,3), (0,-15,7,-8), (3,-1,1,-8), (13,-5,7,15),
    (-6,12,-10,-11), (10,2,4,-13), (-2,1,-5,2), (-14,9,-11,-11), (-14,8,7,-2), (-8,-9,7,-3), (-11,3,1,-4), (-3,-5,4,12),
    (-12,-8,15,3), (9,-11,-7,-6), (15,2,-2,13), (-13,3,10,-10), (9,-11,2,0), (-2,7,3,9), (-13,-9,10,5), (-11,13,7,4),
    (1,-1,-9,15), (-11,9,12,-7), (0,-9,-9,7), (1,-8,-4,-12), (0,10,10,-3), (-10,11,12,-6), (1,-5,12,4), (-13,7,-6,8),
    (5,7,-12,-14), (-12,-10,0,-13), (3,-10,-6,0), (0,-7,0,-10), (2,4,2,-5), (13,-10,-6,-14), (-14,-14,6,-12), (14,-2,9,-14),
    (-6,-7,-9,-10), (-13,-9,14,-5), (4,-14,-15,-15), (-11,9,-13,-2), (-1,9,-1,15), (3,3,-10,1), (13,-7,-4,-12), (-10,-15,-5,15),
    (-12,4,0,10), (-9,-8,13,6), (-13,-7,-4,-7), (-11,9,7,-8), (7,-5,-13,3), (-11,9,5,12), (-3,-12,-12,-4), (-5,-13,-9,-3),
    (-9,13,-10,-6), (11,-1,-1,-9), (5,-7,-6,9), (-10,4,11,3), (0,8,0,9), (4,6,-4,2), (-1,-6,-12,-6), (-3,-7,-8,-7),
    (8,-6,-2,-12), (-6,-1,8,-14), (-9,-15,1,-15), (-3,3,14,-3), (13,-15,1,-14), (4,8,13,0), (1,4,-5,0), (-7,-4,4,-10),
    (1,-3,6,10), (-13,2,-4,-13), (-6,-1,-12,1), (3,9,10,3), (5,4,4,-11), (-9,12,-9,9), (-10,12,-15,12), (2,-3,0,8),
    (15,2,-7,5), (-2,2,12,-8), (-8,-11,5,4), (14,5,-6,-5), (13,13,7,-4), (-8,-7,11,-14), (-8,11,3,-5), (8,12,13,7),
    (7,14,14,-7), (-11,-15,3,12), (6,-14,-14,9), (-5,-10,-3,12), (8,0,-11,2), (-6,-12,9,11), (1,14,2,-9), (2,-10,4,11),
    (-10,-15,-13,1), (-14,7,15,-9), (1,5,0,-14), (3,6,-10,2), (3,-7,-3,-11), (5,10,3,-15), (-9,4,-9,2), (5,-5,-5,-15),
    (13,11,-10,7), (-10,-12,-4,-15), (11,-15,-4,-6), (-6,4,-6,11), (2,-14,11,9), (8,11,-8,7), (-7,5,4,-14), (13,11,-11,15),
)
# fmt: on

_ARR = np.asarray(PAIR_TABLE, dtype=np.int64)

# (ax, ay) and (bx, by) offsets, each of shape (256,)
AX, AY, BX, BY = _ARR[:, 0], _ARR[:, 1], _ARR[:, 2], _ARR[:, 3]

PATCH_RADIUS = 15

