"""
Seeded RNG helpers for deterministic runs.

Every stream is a numpy ``Generator`` over the counter-based Philox4x64-10
bit generator, keyed through ``SeedSequence``. Both algorithms are frozen in
numpy, so a run can be reproduced from its 64-bit seed alone.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    """Construct a Philox-based Generator from a 64-bit seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed) & MASK64)))


def derive_seeds(master_seed: int, n: int) -> list[int]:
    """
    Independent child seeds via SeedSequence spawning.
    Child i only depends on (master_seed, i).
    """
    if n < 0:
        raise ValueError("seed count must be non-negative")
    children = np.random.SeedSequence(int(master_seed) & MASK64).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def spawn_rngs(seed: int, n: int) -> list[np.random.Generator]:
    """One independent stream per slot (e.g. per lattice cell)."""
    children = np.random.SeedSequence(int(seed) & MASK64).spawn(n)
    return [np.random.Generator(np.random.Philox(c)) for c in children]
