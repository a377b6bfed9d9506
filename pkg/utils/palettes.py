"""
Fixed palettes for spacetime and frame rendering. Exact triples are listed
in docs/formats.md.
"""

from __future__ import annotations

import numpy as np

BLACK = (0, 0, 0)
WHITE = (255, 255, 255)
GRAY = (128, 128, 128)
RED = (220, 20, 20)

# blue -> white -> red, 256 entries, index 0 = angle -pi, index 128 = angle 0
_COLD = np.array([49, 54, 149], dtype=np.float64)
_MID = np.array([247, 247, 247], dtype=np.float64)
_HOT = np.array([165, 0, 38], dtype=np.float64)


def _divergent(size: int = 256) -> np.ndarray:
    t = np.arange(size, dtype=np.float64) / (size // 2)
    lower = _COLD + (_MID - _COLD) * np.clip(t, 0.0, 1.0)[:, None]
    upper = _MID + (_HOT - _MID) * np.clip(t - 1.0, 0.0, 1.0)[:, None]
    rgb = np.where((t <= 1.0)[:, None], lower, upper)
    return np.rint(rgb).astype(np.uint8)


DIVERGENT_256 = _divergent()
DIVERGENT_256.setflags(write=False)

# categorical colours for the top-M k-mers, cycled when M exceeds the list
CATEGORICAL = np.array([
    (31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40),
    (148, 103, 189), (140, 86, 75), (227, 119, 194), (188, 189, 34),
    (23, 190, 207), (255, 187, 120), (152, 223, 138), (174, 199, 232),
], dtype=np.uint8)
CATEGORICAL.setflags(write=False)


def angle_index(dx: np.ndarray, dy: np.ndarray, size: int = 256) -> np.ndarray:
    """Map atan2(dy, dx) in (-pi, pi] onto [0, size)."""
    theta = np.arctan2(dy, dx)
    idx = np.floor((theta + np.pi) / (2 * np.pi) * size).astype(np.int64)
    return np.clip(idx, 0, size - 1)


def signed_colors(matrix: np.ndarray) -> np.ndarray:
    """Reds for positive values, blues for negative, black for 0; intensity by magnitude."""
    m = np.asarray(matrix, dtype=np.int64)
    peak = max(1, int(np.abs(m).max(initial=0)))
    level = (96 + np.rint(159 * np.abs(m) / peak)).astype(np.uint8)
    rgb = np.zeros(m.shape + (3,), dtype=np.uint8)
    rgb[m > 0, 0] = level[m > 0]
    rgb[m < 0, 2] = level[m < 0]
    rgb[m < 0, 1] = level[m < 0] // 3
    return rgb
