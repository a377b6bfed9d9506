"""
2D numerical automaton on a torus.

Genes are integer vectors (dx, dy); replication and chain extension work as
in the 1D engine with vector offsets from the original cell. Norms Zero and
D carry over; D compares the occupants one step ahead of and behind the
contested cell's previous vector.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from utils.palettes import BLACK, DIVERGENT_256, angle_index
from utils.rng import make_rng
from .norms import NormId

logger = logging.getLogger(__name__)

NORMS_2D = (NormId.ZERO, NormId.D)


class World2DError(ValueError):
    pass


@dataclass(frozen=True)
class World2D:
    """``cells[y, x] = (dx, dy)``; (0, 0) marks an empty cell."""

    cells: np.ndarray
    norm: NormId = NormId.ZERO

    def __post_init__(self):
        cells = np.array(self.cells, dtype=np.int64)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "norm", NormId(self.norm))
        if cells.ndim != 3 or cells.shape[2] != 2:
            raise World2DError("cells must have shape (H, W, 2)")
        h, w = cells.shape[:2]
        if w < 2 or h < 1:
            raise World2DError("a 2D world needs W >= 2 and H >= 1")
        if self.norm not in NORMS_2D:
            raise World2DError("only norms zero and d are defined in 2D")
        if np.any(np.abs(cells[..., 0]) >= w) or np.any(np.abs(cells[..., 1]) >= h):
            raise World2DError("gene components must stay below the grid size")

    @classmethod
    def empty(cls, width: int, height: int, norm: NormId = NormId.ZERO) -> "World2D":
        return cls(np.zeros((height, width, 2), dtype=np.int64), norm)

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def occupied(self) -> np.ndarray:
        return np.any(self.cells != 0, axis=2)


def _chain(x: int, y: int, gene: tuple[int, int], cells: list, w: int, h: int) -> list[tuple[int, int]]:
    targets = [(x, y)]
    seen = {(x, y)}
    dx, dy = gene
    while True:
        t = ((x + dx) % w, (y + dy) % h)
        if t in seen:
            break
        seen.add(t)
        targets.append(t)
        occupant = cells[t[1]][t[0]]
        if occupant == (0, 0):
            break
        dx, dy = occupant
    return targets


def _norm_d(cell: tuple[int, int], prev: list, w: int, h: int) -> tuple[int, int]:
    x, y = cell
    sx, sy = prev[y][x]
    ahead = prev[(y + sy) % h][(x + sx) % w]
    behind = prev[(y - sy) % h][(x - sx) % w]
    if ahead != behind:
        return (0, 0)
    out = (-sx + 2 * ahead[0], -sy + 2 * ahead[1])
    if abs(out[0]) >= w or abs(out[1]) >= h:
        return (0, 0)
    return out


def step_2d(prev: World2D) -> tuple[World2D, int]:
    h, w = prev.height, prev.width
    grid = [[(int(c[0]), int(c[1])) for c in row] for row in prev.cells]

    arrivals: dict[tuple[int, int], set[tuple[int, int]]] = defaultdict(set)
    for y in range(h):
        for x in range(w):
            gene = grid[y][x]
            if gene == (0, 0):
                continue
            for t in _chain(x, y, gene, grid, w, h):
                arrivals[t].add(gene)

    nxt = np.zeros_like(prev.cells)
    collisions = 0
    for (x, y), values in arrivals.items():
        if len(values) == 1:
            nxt[y, x] = next(iter(values))
            continue
        collisions += 1
        if prev.norm is NormId.D:
            nxt[y, x] = _norm_d((x, y), grid, w, h)
    return World2D(nxt, prev.norm), collisions


def run_2d(initial: World2D, generations: int) -> list[World2D]:
    if generations < 1:
        raise World2DError("need at least one generation")
    frames = [initial]
    for _ in range(1, generations):
        frames.append(step_2d(frames[-1])[0])
    logger.debug("2D run finished: %dx%d G=%d", initial.width, initial.height, generations)
    return frames


def seed_world_2d(width: int, height: int, fill: float, value_max: int, rng_seed: int,
                  norm: NormId = NormId.ZERO) -> World2D:
    """Occupy round(fill * W * H) random cells with nonzero vectors in [-value_max, value_max]^2."""
    if not 0.0 <= fill <= 1.0:
        raise World2DError("fill must be within [0, 1]")
    if value_max < 1:
        raise World2DError("value_max must be at least 1")
    rng = make_rng(rng_seed)
    cells = np.zeros((height, width, 2), dtype=np.int64)
    count = int(round(fill * width * height))
    sites = np.sort(rng.choice(width * height, size=count, replace=False))
    vmax_x = min(value_max, width - 1)
    vmax_y = min(value_max, height - 1)
    for site in sites:
        while True:
            dx = int(rng.integers(-vmax_x, vmax_x + 1))
            dy = int(rng.integers(-vmax_y, vmax_y + 1))
            if (dx, dy) != (0, 0):
                break
        cells[site // width, site % width] = (dx, dy)
    return World2D(cells, norm)


def render_angle_field(world: World2D) -> np.ndarray:
    """(H, W, 3) uint8 image: occupied cells coloured by atan2(dy, dx), empty cells black."""
    dx = world.cells[..., 0]
    dy = world.cells[..., 1]
    image = DIVERGENT_256[angle_index(dx, dy)].copy()
    image[~world.occupied] = BLACK
    return image
