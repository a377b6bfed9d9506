"""
1D numerical automaton.

Every gene n at cell a copies itself into a (persistence) and a+n. When
a+n was already occupied by m, it also tries a+m, and so on until it
lands on a cell that was empty or would revisit a target. Cells hit by
several distinct values are handed to the cell's collision norm.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from utils.rng import make_rng
from .norms import Collider, NormId, build_context, resolve_collision

logger = logging.getLogger(__name__)

BOUNDARIES = ("periodic", "bounded")


class WorldError(ValueError):
    pass


# ---------------- Types ----------------

@dataclass(frozen=True)
class World1D:
    cells: np.ndarray
    norm_map: tuple[NormId, ...]
    boundary: str = "periodic"

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "norm_map", tuple(NormId(n) for n in self.norm_map))
        if cells.ndim != 1 or len(cells) < 2:
            raise WorldError("a world needs at least 2 cells")
        if len(self.norm_map) != len(cells):
            raise WorldError("norm_map length differs from cell count")
        if self.boundary not in BOUNDARIES:
            raise WorldError(f"boundary must be one of {BOUNDARIES}")
        if np.any(np.abs(cells) >= len(cells)):
            raise WorldError(f"gene magnitude must stay below the grid length {len(cells)}")

    @classmethod
    def uniform(cls, cells: Sequence[int], norm: NormId = NormId.ZERO,
                boundary: str = "periodic") -> "World1D":
        return cls(np.asarray(cells, dtype=np.int64), (NormId(norm),) * len(cells), boundary)

    @property
    def length(self) -> int:
        return len(self.cells)

    def with_cells(self, cells: np.ndarray) -> "World1D":
        return World1D(cells, self.norm_map, self.boundary)


@dataclass(frozen=True)
class ReplicationAttempt:
    source_pos: int
    value: int
    target_pos: int
    chain_depth: int
    shift: int


@dataclass
class RunLog:
    """Per-generation tallies aligned with a spacetime (entry g belongs to row g)."""

    attempts: list[int] = field(default_factory=list)
    collisions: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.attempts)


@dataclass(frozen=True)
class Spacetime:
    """Stacked generations; ``rows[g, a]`` is X[a, g]."""

    rows: np.ndarray
    norm_map: tuple[NormId, ...]
    boundary: str = "periodic"
    log: RunLog | None = None

    @property
    def generations(self) -> int:
        return self.rows.shape[0]

    @property
    def length(self) -> int:
        return self.rows.shape[1]

    def world(self, g: int) -> World1D:
        return World1D(self.rows[g], self.norm_map, self.boundary)


# ---------------- Replication ----------------

def _wrap(pos: int, length: int, boundary: str) -> int | None:
    if boundary == "periodic":
        return pos % length
    return pos if 0 <= pos < length else None


def replication_targets(a: int, n: int, prev: World1D) -> list[ReplicationAttempt]:
    cells = prev.cells
    length = prev.length
    attempts = [ReplicationAttempt(a, n, a, 0, 0)]
    seen = {a}
    shift, depth = n, 1
    while True:
        target = _wrap(a + shift, length, prev.boundary)
        if target is None or target in seen:
            break
        seen.add(target)
        attempts.append(ReplicationAttempt(a, n, target, depth, shift))
        occupant = int(cells[target])
        if occupant == 0:
            break
        shift, depth = occupant, depth + 1
    return attempts


def _resolve_cell(target: int, group: list[ReplicationAttempt], prev: World1D) -> tuple[int, bool]:
    # identical values merge into one collider, keeping the leftmost source
    by_value: dict[int, Collider] = {}
    for att in group:
        held = by_value.get(att.value)
        if held is None or att.source_pos < held.source:
            by_value[att.value] = Collider(att.value, att.source_pos, att.shift)

    if len(by_value) == 1:
        return next(iter(by_value)), False

    colliders = sorted(by_value.values(), key=lambda c: (c.source, c.value))
    norm = prev.norm_map[target]
    acc = colliders[0]
    for nxt in colliders[1:]:
        if acc.value == nxt.value:
            continue
        ctx = build_context(target, acc, nxt, prev.cells, prev.boundary)
        acc = Collider(resolve_collision(norm, ctx), acc.source, acc.shift)
    return acc.value, True


def step_1d(prev: World1D) -> tuple[World1D, list[ReplicationAttempt], int]:
    attempts: list[ReplicationAttempt] = []
    for a in np.flatnonzero(prev.cells):
        attempts.extend(replication_targets(int(a), int(prev.cells[a]), prev))

    groups: dict[int, list[ReplicationAttempt]] = defaultdict(list)
    for att in attempts:
        groups[att.target_pos].append(att)

    nxt = np.zeros(prev.length, dtype=np.int64)
    collisions = 0
    for target, group in groups.items():
        value, contested = _resolve_cell(target, group, prev)
        nxt[target] = value
        collisions += contested
    return prev.with_cells(nxt), attempts, collisions


def run_1d(initial: World1D, generations: int) -> Spacetime:
    """Rows 0..G-1 with row 0 the initial condition; the attached log counts
    attempts emitted by each row and collisions resolved to produce it."""
    if generations < 1:
        raise WorldError("need at least one generation")
    rows = np.zeros((generations, initial.length), dtype=np.int64)
    rows[0] = initial.cells
    log = RunLog(attempts=[0] * generations, collisions=[0] * generations)

    world = initial
    for g in range(1, generations):
        world, attempts, collisions = step_1d(world)
        rows[g] = world.cells
        log.attempts[g - 1] = len(attempts)
        log.collisions[g] = collisions
    log.attempts[-1] = sum(len(replication_targets(int(a), int(world.cells[a]), world))
                           for a in np.flatnonzero(world.cells))

    logger.debug("1D run finished: L=%d G=%d", initial.length, generations)
    return Spacetime(rows, initial.norm_map, initial.boundary, log)


# ---------------- Seeding ----------------

@dataclass(frozen=True)
class SparseSeed:
    genes: int
    value_min: int = 1
    value_max: int = 8
    region: tuple[int, int] | None = None  # half-open; None = centered block of region_width
    region_width: int = 16


@dataclass(frozen=True)
class DenseSeed:
    fill: float
    value_min: int = 1
    value_max: int = 8


@dataclass(frozen=True)
class ExplicitSeed:
    values: tuple[int, ...]
    positions: tuple[int, ...] | None = None
    offset: int = 0


SeedSpec = Union[SparseSeed, DenseSeed, ExplicitSeed]


def _draw_values(rng: np.random.Generator, count: int, lo: int, hi: int) -> np.ndarray:
    if not (1 <= lo <= hi):
        raise WorldError("value range must satisfy 1 <= value_min <= value_max")
    magnitudes = rng.integers(lo, hi + 1, size=count)
    signs = np.where(rng.integers(0, 2, size=count) == 1, 1, -1)
    return magnitudes * signs


def seed_world(length: int, spec: SeedSpec, rng_seed: int, norm_map: Sequence[NormId] | None = None,
               boundary: str = "periodic") -> World1D:
    if length < 2:
        raise WorldError("a world needs at least 2 cells")
    norm_map = tuple(norm_map) if norm_map is not None else (NormId.ZERO,) * length
    cells = np.zeros(length, dtype=np.int64)

    if isinstance(spec, ExplicitSeed):
        positions = spec.positions if spec.positions is not None else \
            tuple(spec.offset + i for i in range(len(spec.values)))
        if len(positions) != len(spec.values):
            raise WorldError("explicit positions and values differ in length")
        for pos, value in zip(positions, spec.values):
            if value == 0:
                raise WorldError("explicit genes cannot be 0")
            if abs(value) >= length:
                raise WorldError(f"gene {value} does not fit a grid of length {length}")
            if not 0 <= pos < length:
                raise WorldError(f"position {pos} is outside the grid")
            cells[pos] = value
        return World1D(cells, norm_map, boundary)

    if spec.value_max >= length:
        raise WorldError(f"value_max {spec.value_max} does not fit a grid of length {length}")
    rng = make_rng(rng_seed)

    if isinstance(spec, SparseSeed):
        if spec.region is not None:
            start, end = spec.region
        else:
            width = min(spec.region_width, length)
            start = (length - width) // 2
            end = start + width
        if not (0 <= start < end <= length) or spec.genes > end - start:
            raise WorldError(f"{spec.genes} genes do not fit region [{start}, {end})")
        positions = start + rng.choice(end - start, size=spec.genes, replace=False)
        cells[np.sort(positions)] = _draw_values(rng, spec.genes, spec.value_min, spec.value_max)
    elif isinstance(spec, DenseSeed):
        if not 0.0 <= spec.fill <= 1.0:
            raise WorldError("fill must be within [0, 1]")
        count = int(round(spec.fill * length))
        positions = rng.choice(length, size=count, replace=False)
        cells[np.sort(positions)] = _draw_values(rng, count, spec.value_min, spec.value_max)
    else:
        raise WorldError(f"unsupported seed spec {spec!r}")
    return World1D(cells, norm_map, boundary)
