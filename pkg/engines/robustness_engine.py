"""
Robustness of an organism against a single intruding gene.

A control run of the organism alone fixes its recurring phase patterns.
Each (value, distance) pair then reruns the organism with one extra gene
placed ``distance`` cells right of its last gene; the organism survived
if any of its phase patterns shows up as a contiguous run of cells in
some generation from ``survival_from * G`` on.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from .norms import NormId
from .world1d_engine import ExplicitSeed, WorldError, run_1d, seed_world

logger = logging.getLogger(__name__)


class AperiodicControlError(RuntimeError):
    pass


@dataclass(frozen=True)
class RobustnessRow:
    intruder_value: int
    initial_distance: int
    survived: bool
    generations_to_verdict: int


@dataclass(frozen=True)
class RobustnessReport:
    period: int
    phases: tuple[tuple[int, ...], ...]
    rows: tuple[RobustnessRow, ...]
    control: np.ndarray | None = None

    @property
    def survival_rate(self) -> float:
        return sum(r.survived for r in self.rows) / len(self.rows) if self.rows else 0.0

    def as_rows(self) -> list[tuple[int, int, bool, int]]:
        return [(r.intruder_value, r.initial_distance, r.survived, r.generations_to_verdict)
                for r in self.rows]


@dataclass(frozen=True)
class SweepSetup:
    length: int
    generations: int
    organism: tuple[int, ...]
    norm: NormId = NormId.ZERO
    boundary: str = "periodic"
    survival_from: float = 0.5

    @property
    def start(self) -> int:
        return (self.length - len(self.organism)) // 2

    @property
    def last_gene(self) -> int:
        return self.start + len(self.organism) - 1

    @property
    def verdict_from(self) -> int:
        return math.ceil(self.generations * self.survival_from)


def signature(row: np.ndarray) -> tuple[int, ...]:
    """Row contents between the first and last occupied cell; () when empty."""
    occupied = np.flatnonzero(row)
    if occupied.size == 0:
        return ()
    return tuple(int(v) for v in row[occupied[0]:occupied[-1] + 1])


def contains_pattern(row: np.ndarray, pattern: Sequence[int], periodic: bool) -> bool:
    k = len(pattern)
    if k == 0 or k > len(row):
        return False
    cells = np.concatenate([row, row[:k - 1]]) if periodic and k > 1 else np.asarray(row)
    if len(cells) < k:
        return False
    windows = np.lib.stride_tricks.sliding_window_view(cells, k)
    return bool(np.any(np.all(windows == np.asarray(pattern), axis=1)))


def detect_period(rows: np.ndarray, verdict_from: int) -> tuple[int, tuple[tuple[int, ...], ...]]:
    """
    Smallest p such that row signatures repeat with period p over the tail
    ``[verdict_from, G)`` at least twice; returns p and the p phase patterns.
    """
    sigs = [signature(r) for r in rows]
    tail = sigs[verdict_from:]
    if not tail or any(s == () for s in tail):
        raise AperiodicControlError("the organism dies out in the control run")
    for p in range(1, len(tail) // 2 + 1):
        if all(tail[i] == tail[i + p] for i in range(len(tail) - p)):
            return p, tuple(tail[:p])
    raise AperiodicControlError(
        f"control run shows no recurring pattern within {rows.shape[0]} generations")


def _place(setup: SweepSetup, value: int | None, distance: int):
    values = list(setup.organism)
    positions = list(range(setup.start, setup.start + len(values)))
    if value is not None:
        pos = setup.last_gene + distance
        if setup.boundary == "periodic":
            pos %= setup.length
        elif pos >= setup.length:
            raise WorldError(f"intruder at distance {distance} falls off the grid")
        if pos in positions:
            values[positions.index(pos)] = value
        else:
            positions.append(pos)
            values.append(value)
    norm_map = (setup.norm,) * setup.length
    return seed_world(setup.length, ExplicitSeed(tuple(values), tuple(positions)), 0,
                      norm_map, setup.boundary)


def control_run(setup: SweepSetup) -> np.ndarray:
    return run_1d(_place(setup, None, 0), setup.generations).rows


def _trial(setup: SweepSetup, phases: tuple[tuple[int, ...], ...], pair: tuple[int, int]) -> RobustnessRow:
    value, distance = pair
    rows = run_1d(_place(setup, value, distance), setup.generations).rows
    periodic = setup.boundary == "periodic"
    for g in range(setup.verdict_from, setup.generations):
        if any(contains_pattern(rows[g], phase, periodic) for phase in phases):
            return RobustnessRow(value, distance, True, g)
    return RobustnessRow(value, distance, False, setup.generations)


def robustness_sweep(setup: SweepSetup, values: Sequence[int], distances: Sequence[int],
                     jobs: int = 1) -> RobustnessReport:
    if not values or not distances:
        raise ValueError("the sweep grid is empty")
    control = control_run(setup)
    period, phases = detect_period(control, setup.verdict_from)
    logger.info("control organism %s recurs with period %d", list(setup.organism), period)

    grid = [(int(v), int(d)) for v in values for d in distances]
    trial = partial(_trial, setup, phases)
    if jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(trial, grid))
    else:
        rows = [trial(pair) for pair in grid]
    report = RobustnessReport(period, phases, tuple(rows), control)
    logger.info("robustness sweep: %d/%d trials survived", sum(r.survived for r in rows), len(rows))
    return report
