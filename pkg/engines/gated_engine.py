"""
Gated elementary CA.

An elementary rule (110 by default) only fires at a cell whose 5-cell
window holds at least ``threshold`` active cells. Where the gate stays shut
the cell is cleared, and active cells cleared that way are logged as decay
mutations.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from utils.rng import make_rng

logger = logging.getLogger(__name__)

WINDOW_RADIUS = 2


class GateError(ValueError):
    pass


@dataclass(frozen=True)
class GateConfig:
    rule: int = 110
    threshold: int = 2
    radius: int = WINDOW_RADIUS

    def __post_init__(self):
        if not 0 <= self.rule <= 255:
            raise GateError("rule must be an 8-bit elementary rule number")
        if self.radius != WINDOW_RADIUS:
            raise GateError("the gate window radius is fixed at 2")
        if not 0 <= self.threshold <= 2 * WINDOW_RADIUS + 1:
            raise GateError("threshold must be within [0, 5]")

    @property
    def table(self) -> np.ndarray:
        return np.unpackbits(np.uint8(self.rule), bitorder="little")


@dataclass(frozen=True)
class BoolWorld:
    cells: np.ndarray

    def __post_init__(self):
        cells = (np.asarray(self.cells) != 0).astype(np.uint8)
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        if cells.ndim != 1 or len(cells) < 2 * WINDOW_RADIUS + 1:
            raise GateError("a Boolean world needs at least 5 cells")

    @classmethod
    def random(cls, length: int, density: float, rng_seed: int) -> "BoolWorld":
        rng = make_rng(rng_seed)
        return cls((rng.random(length) < density).astype(np.uint8))


def eca_step(cells: np.ndarray, table: np.ndarray) -> np.ndarray:
    left = np.roll(cells, 1)
    right = np.roll(cells, -1)
    return table[4 * left + 2 * cells + right]


def gate_open(cells: np.ndarray, threshold: int) -> np.ndarray:
    count = sum(np.roll(cells, s) for s in range(-WINDOW_RADIUS, WINDOW_RADIUS + 1))
    return count >= threshold


def step_gated(world: BoolWorld, cfg: GateConfig) -> tuple[BoolWorld, np.ndarray]:
    cells = world.cells.astype(np.int64)
    gate = gate_open(cells, cfg.threshold)
    ruled = eca_step(cells, cfg.table)
    nxt = np.where(gate, ruled, 0).astype(np.uint8)
    decay = (~gate & (cells == 1)).astype(np.uint8)
    return BoolWorld(nxt), decay


def run_gated(initial: BoolWorld, cfg: GateConfig, generations: int) -> tuple[np.ndarray, np.ndarray]:
    """Spacetime and decay log, both (G, L) uint8; decay row g marks decays that produced row g."""
    if generations < 1:
        raise GateError("need at least one generation")
    length = len(initial.cells)
    spacetime = np.zeros((generations, length), dtype=np.uint8)
    decay_log = np.zeros((generations, length), dtype=np.uint8)
    spacetime[0] = initial.cells
    world = initial
    for g in range(1, generations):
        world, decay = step_gated(world, cfg)
        spacetime[g] = world.cells
        decay_log[g] = decay
    logger.debug("gated run finished: rule=%d theta=%d decays=%d",
                 cfg.rule, cfg.threshold, int(decay_log.sum()))
    return spacetime, decay_log
