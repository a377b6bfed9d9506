"""
Motif repetition statistics.

For a population of strands and a motif length k:
  W  total sliding windows,
  S  windows whose k-mer occurs exactly once in the whole population,
  R  = (W - S) / W, the fraction of windows whose k-mer repeats (0 when W = 0).
E flags cycles where R reaches the threshold; P(k, t) is the fraction of
seeds with E = 1 at cycle t, reported with Wilson score bounds.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from statistics import NormalDist
from typing import Iterable, Sequence

import numpy as np

from config import REPEAT_THRESHOLD, WILSON_Z95


def repeated_window_fraction(strands: Iterable[str], k: int) -> tuple[int, int, float]:
    if k < 1:
        raise ValueError("k must be at least 1")
    counts: Counter[str] = Counter()
    for s in strands:
        counts.update(s[p:p + k] for p in range(len(s) - k + 1))
    windows = sum(counts.values())
    if windows == 0:
        return 0, 0, 0.0
    singletons = sum(1 for c in counts.values() if c == 1)
    return windows, singletons, (windows - singletons) / windows


def threshold_indicator(r: float, tau: float = REPEAT_THRESHOLD) -> int:
    if not 0.0 <= tau <= 1.0:
        raise ValueError("threshold must be within [0, 1]")
    return int(r >= tau)


def run_fraction(indicators: np.ndarray | Sequence[Sequence[int]]) -> np.ndarray:
    """Column means of an N x T indicator matrix."""
    matrix = np.atleast_2d(np.asarray(indicators, dtype=np.float64))
    if matrix.shape[0] < 1:
        raise ValueError("need at least one run")
    return matrix.mean(axis=0)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """
    Wilson score interval for a binomial proportion.

    At 95% the critical value is fixed to z = 1.959964; other levels use the
    normal quantile. Bounds are clamped to [0, 1] and pinned at the edges
    (0 successes gives lower = 0, n successes gives upper = 1).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= successes <= n:
        raise ValueError("successes must be within [0, n]")
    if confidence == 0.95:
        z = WILSON_Z95
    else:
        z = NormalDist().inv_cdf(0.5 + confidence / 2.0)

    p_hat = successes / n
    denominator = 1 + z**2 / n
    center = (p_hat + z**2 / (2 * n)) / denominator
    spread = z * math.sqrt((p_hat * (1 - p_hat) + z**2 / (4 * n)) / n) / denominator

    lower = 0.0 if successes == 0 else max(0.0, center - spread)
    upper = 1.0 if successes == n else min(1.0, center + spread)
    # keep the point estimate inside despite rounding
    return min(lower, p_hat), max(upper, p_hat)


@dataclass(frozen=True)
class MotifStats:
    """Per-cycle repetition statistics of one run for one k."""

    k: int
    tau: float
    windows: np.ndarray
    singletons: np.ndarray
    repeated: np.ndarray

    @property
    def indicators(self) -> np.ndarray:
        return (self.repeated >= self.tau).astype(np.int8)

    def as_rows(self) -> list[tuple[str, int, float]]:
        rows = []
        for name, series in (("W", self.windows), ("S", self.singletons),
                             ("R", self.repeated), ("E", self.indicators)):
            for t, value in enumerate(series):
                rows.append((f"{name}_{self.k}", t, float(value)))
        return rows


def motif_stats(snapshots: Sequence[Iterable[tuple[int, str]]], k: int,
                tau: float = REPEAT_THRESHOLD) -> MotifStats:
    """Statistics over soup snapshots (each a collection of ``(strand_id, sequence)``)."""
    threshold_indicator(0.0, tau)
    triples = [repeated_window_fraction((seq for _, seq in snap), k) for snap in snapshots]
    w, s, r = zip(*triples) if triples else ((), (), ())
    return MotifStats(k, tau, np.array(w, dtype=np.int64), np.array(s, dtype=np.int64),
                      np.array(r, dtype=np.float64))


@dataclass(frozen=True)
class RunFraction:
    """P(k, t) across seeds with its Wilson bounds."""

    k: int
    runs: int
    p: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def as_rows(self) -> list[tuple[int, int, float, float, float]]:
        return [(self.k, t, float(p), float(lo), float(hi))
                for t, (p, lo, hi) in enumerate(zip(self.p, self.lower, self.upper))]


def cross_seed_fraction(per_seed: Sequence[MotifStats]) -> RunFraction:
    if not per_seed:
        raise ValueError("need at least one run")
    k = per_seed[0].k
    if any(m.k != k for m in per_seed):
        raise ValueError("runs mix different motif lengths")
    lengths = {len(m.repeated) for m in per_seed}
    if len(lengths) != 1:
        raise ValueError("runs cover different numbers of cycles")
    matrix = np.vstack([m.indicators for m in per_seed])
    p = run_fraction(matrix)
    hits = matrix.sum(axis=0)
    n = matrix.shape[0]
    bounds = [wilson_interval(int(h), n) for h in hits]
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])
    return RunFraction(k, n, p, lower, upper)


# ---------------- Domains in dominant k-mer spacetimes ----------------

@dataclass(frozen=True)
class Domain:
    kmer_id: int
    first_cycle: int
    last_cycle: int
    max_width: int

    @property
    def duration(self) -> int:
        return self.last_cycle - self.first_cycle + 1


def _runs(row: np.ndarray, min_width: int) -> list[tuple[int, int, int]]:
    """Maximal runs ``(start, end_exclusive, id)`` of one non-negative id, joined across the ring seam."""
    n = len(row)
    runs = []
    start = 0
    for i in range(1, n + 1):
        if i == n or row[i] != row[start]:
            runs.append((start, i, int(row[start])))
            start = i
    if len(runs) > 1 and runs[0][2] == runs[-1][2]:
        head = runs.pop(0)
        tail = runs.pop()
        runs.append((tail[0], head[1] + n, tail[2]))
    return [r for r in runs if r[2] >= 0 and r[1] - r[0] >= min_width]


def _overlaps(a: tuple[int, int, int], b: tuple[int, int, int], n: int) -> bool:
    for shift in (-n, 0, n):
        if a[0] < b[1] + shift and b[0] + shift < a[1]:
            return True
    return False


def persistent_domains(ids: np.ndarray, min_width: int, min_duration: int) -> list[Domain]:
    """
    Domains of one dominant k-mer at least ``min_width`` sites wide that
    persist for ``min_duration`` cycles or more. A domain continues into the
    next cycle when a run of the same id, also wide enough, overlaps it.
    """
    if min_width < 1 or min_duration < 1:
        raise ValueError("min_width and min_duration must be positive")
    matrix = np.atleast_2d(ids)
    n = matrix.shape[1]
    finished: list[Domain] = []
    active: list[tuple[tuple[int, int, int], int, int]] = []  # (run, first_cycle, max_width)

    for t, row in enumerate(matrix):
        current = _runs(row, min_width)
        carried = []
        taken = set()
        for run in current:
            match = None
            for idx, (prev, first, width) in enumerate(active):
                if idx not in taken and prev[2] == run[2] and _overlaps(prev, run, n):
                    match = idx
                    break
            if match is None:
                carried.append((run, t, run[1] - run[0]))
            else:
                taken.add(match)
                _, first, width = active[match]
                carried.append((run, first, max(width, run[1] - run[0])))
        for idx, (prev, first, width) in enumerate(active):
            if idx not in taken:
                finished.append(Domain(prev[2], first, t - 1, width))
        active = carried

    last = matrix.shape[0] - 1
    finished.extend(Domain(run[2], first, last, width) for run, first, width in active)
    return sorted((d for d in finished if d.duration >= min_duration),
                  key=lambda d: (d.first_cycle, d.kmer_id))
