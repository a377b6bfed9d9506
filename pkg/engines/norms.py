"""
Collision norms for the numerical automaton.

A norm decides the value of a cell that two or more distinct genes try to
occupy in the same generation. All functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class NormId(str, Enum):
    ZERO = "zero"
    A = "a"
    B = "b"
    C = "c"
    D = "d"

    @classmethod
    def parse(cls, name: str) -> "NormId":
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            valid = "|".join(n.value for n in cls)
            raise ValueError(f"unknown norm {name!r}, expected one of {valid}") from None


class NormMapError(ValueError):
    pass


@dataclass(frozen=True)
class Collider:
    value: int
    source: int
    shift: int  # target == source + shift before boundary handling


@dataclass(frozen=True)
class CollisionContext:
    """
    Everything a norm reads to resolve the contested cell ``target``.

    ``v`` is the displacement of the collider arriving from the left
    (source at target - v), ``u`` the one arriving from the right
    (source at target + u).
    """

    target: int
    colliders: tuple[Collider, ...]
    prev_row: np.ndarray
    boundary: str
    u: int
    v: int

    @property
    def length(self) -> int:
        return len(self.prev_row)

    @property
    def prev_occupied(self) -> bool:
        return int(self.prev_row[self.target]) != 0

    def lookup(self, offset: int) -> int:
        """X[target + offset, g-1]; outside a bounded world reads as empty."""
        pos = self.target + offset
        if self.boundary == "periodic":
            return int(self.prev_row[pos % self.length])
        if 0 <= pos < self.length:
            return int(self.prev_row[pos])
        return 0


def arrival_sides(first: Collider, second: Collider) -> tuple[int, int]:
    """
    Assign (u, v) for a pair sorted by source position.
    A left/right pair maps directly; two arrivals from one side give the
    smaller source the v role.
    """
    if first.shift > 0 > second.shift:
        return -second.shift, first.shift
    if second.shift > 0 > first.shift:
        return -first.shift, second.shift
    return abs(second.shift), abs(first.shift)


def build_context(target: int, first: Collider, second: Collider,
                  prev_row: np.ndarray, boundary: str) -> CollisionContext:
    u, v = arrival_sides(first, second)
    return CollisionContext(target, (first, second), prev_row, boundary, u, v)


def _same_sign(x: int, y: int) -> bool:
    # empty cells never agree
    return x != 0 and y != 0 and (x > 0) == (y > 0)


def _raw_value(norm: NormId, ctx: CollisionContext) -> int:
    if norm is NormId.ZERO:
        return 0

    if norm in (NormId.A, NormId.B):
        if ctx.prev_occupied:
            return 0
        magnitude = ctx.u + ctx.v - (1 if norm is NormId.B else 0)
        if _same_sign(ctx.lookup(ctx.u), ctx.lookup(-ctx.v)):
            return magnitude
        return -magnitude

    if norm is NormId.C:
        if ctx.prev_occupied:
            return 0
        return ctx.lookup(-ctx.v) - ctx.lookup(ctx.u)

    # Norm D reads generation g-1 only
    s = ctx.lookup(0)
    ahead = ctx.lookup(s)
    if ahead == ctx.lookup(-s):
        return -s + 2 * ahead
    return 0


def resolve_collision(norm: NormId, ctx: CollisionContext) -> int:
    value = _raw_value(NormId(norm), ctx)
    if value == 0 or abs(value) >= ctx.length:
        return 0
    return value


def make_norm_map(length: int, patches: Sequence[tuple[int, int, NormId]]) -> tuple[NormId, ...]:
    """Per-cell norm assignment from half-open patches covering [0, length)."""
    if length < 1:
        raise NormMapError("length must be positive")
    cells: list[NormId | None] = [None] * length
    for start, end, norm in patches:
        if not (0 <= start < end <= length):
            raise NormMapError(f"patch ({start}, {end}) is outside [0, {length})")
        for i in range(start, end):
            if cells[i] is not None:
                raise NormMapError(f"patches overlap at cell {i}")
            cells[i] = NormId(norm)
    gaps = [i for i, n in enumerate(cells) if n is None]
    if gaps:
        raise NormMapError(f"patches leave {len(gaps)} cells uncovered, first at {gaps[0]}")
    return tuple(cells)  # type: ignore[arg-type]


def parse_patch(text: str) -> tuple[int, int, NormId]:
    """``"start:end:norm"`` as written in config files."""
    parts = text.split(":")
    if len(parts) != 3:
        raise NormMapError(f"patch {text!r} must look like start:end:norm")
    return int(parts[0]), int(parts[1]), NormId.parse(parts[2])
