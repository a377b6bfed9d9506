from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from engines.world1d_engine import RunLog, Spacetime


@dataclass(frozen=True)
class PopulationSeries:
    living_cells: np.ndarray
    replication_candidates: np.ndarray
    collisions: np.ndarray
    births: np.ndarray
    deaths: np.ndarray

    def as_rows(self) -> list[tuple[str, int, int]]:
        """Long format ``(metric, generation, value)``."""
        rows = []
        for name in ("living_cells", "replication_candidates", "collisions", "births", "deaths"):
            for g, value in enumerate(getattr(self, name)):
                rows.append((name, g, int(value)))
        return rows


def population_series(st: Spacetime, attempts_log: RunLog | None = None) -> PopulationSeries:
    log = attempts_log if attempts_log is not None else st.log
    if log is None:
        raise ValueError("population_series needs the run log of the spacetime")
    if len(log.attempts) != st.generations or len(log.collisions) != st.generations:
        raise ValueError(f"log covers {len(log)} generations, spacetime has {st.generations}")

    alive = st.rows != 0
    births = np.zeros(st.generations, dtype=np.int64)
    deaths = np.zeros(st.generations, dtype=np.int64)
    births[1:] = np.sum(alive[1:] & ~alive[:-1], axis=1)
    deaths[1:] = np.sum(~alive[1:] & alive[:-1], axis=1)
    return PopulationSeries(
        living_cells=alive.sum(axis=1).astype(np.int64),
        replication_candidates=np.asarray(log.attempts, dtype=np.int64),
        collisions=np.asarray(log.collisions, dtype=np.int64),
        births=births,
        deaths=deaths,
    )


def value_histogram(st: Spacetime | np.ndarray) -> list[dict[int, int]]:
    """Per-generation value -> count, empty cells excluded."""
    rows = st.rows if isinstance(st, Spacetime) else np.atleast_2d(st)
    out = []
    for row in rows:
        values, counts = np.unique(row[row != 0], return_counts=True)
        out.append({int(v): int(c) for v, c in zip(values, counts)})
    return out


def living_series(rows: np.ndarray) -> np.ndarray:
    return np.count_nonzero(rows, axis=1)


def dominant_values(histograms: list[dict[int, int]], top: int = 5) -> list[tuple[int, int]]:
    """Values ranked by total occupancy over the run."""
    total: Counter[int] = Counter()
    for h in histograms:
        total.update(h)
    return sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))[:top]
