"""
Plug-in information measures over cell-value distributions, in bits.
The empty value 0 counts as a symbol unless ``include_empty`` is False.
"""

from __future__ import annotations

import numpy as np

from engines.world1d_engine import Spacetime, World1D


def _values(row: World1D | np.ndarray) -> np.ndarray:
    return np.asarray(row.cells if isinstance(row, World1D) else row).ravel()


def _entropy_of_counts(counts: np.ndarray) -> float:
    counts = counts[counts > 0]
    if counts.size <= 1:
        return 0.0
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


def shannon_entropy(row: World1D | np.ndarray, include_empty: bool = True) -> float:
    values = _values(row)
    if not include_empty:
        values = values[values != 0]
    if values.size == 0:
        return 0.0
    _, counts = np.unique(values, return_counts=True)
    return _entropy_of_counts(counts)


def mutual_information(row_i: World1D | np.ndarray, row_j: World1D | np.ndarray) -> float:
    x = _values(row_i)
    y = _values(row_j)
    if x.shape != y.shape:
        raise ValueError(f"rows differ in length: {x.size} vs {y.size}")
    if x.size == 0:
        return 0.0
    _, xc = np.unique(x, return_inverse=True)
    _, yc = np.unique(y, return_inverse=True)
    return _mi_codes(xc.ravel(), yc.ravel())


def _mi_codes(xc: np.ndarray, yc: np.ndarray) -> float:
    k = int(yc.max()) + 1
    joint = np.bincount(xc * k + yc)
    hx = _entropy_of_counts(np.bincount(xc))
    hy = _entropy_of_counts(np.bincount(yc))
    return max(0.0, hx + hy - _entropy_of_counts(joint))


def entropy_series(st: Spacetime | np.ndarray, include_empty: bool = True) -> np.ndarray:
    rows = st.rows if isinstance(st, Spacetime) else st
    return np.array([shannon_entropy(r, include_empty) for r in rows])


def mi_matrix(st: Spacetime | np.ndarray) -> np.ndarray:
    """Symmetric G x G matrix of pairwise MI between generations; diagonal = entropies."""
    rows = st.rows if isinstance(st, Spacetime) else np.asarray(st)
    g = rows.shape[0]
    # one shared code book keeps every row's codes dense
    _, codes = np.unique(rows, return_inverse=True)
    codes = codes.reshape(rows.shape)
    out = np.zeros((g, g))
    for i in range(g):
        out[i, i] = _entropy_of_counts(np.bincount(codes[i]))
        for j in range(i + 1, g):
            out[i, j] = out[j, i] = _mi_codes(codes[i], codes[j])
    return out
