"""
DNA norms on a ring of sites.

Each site holds at most one fragment (strand or duplex) and a nucleotide
budget. Per cycle: strands mutate and grow, duplexes fill their gaps, both
paying from the cell's own budget; then budgets diffuse, neighbours anneal
and fully paired duplexes split into an empty neighbour.

Neighbour interactions run on a pairing of the ring that alternates every
cycle: sites (0,1), (2,3), ... on even cycles and (1,2), (3,4), ... on odd
ones, each phase walking the pairs left to right. A site only ever meets its
partner, so one cycle moves information at most one site. Each site draws
from its own RNG stream.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from config import LATTICE
from utils.rng import make_rng, spawn_rngs
from .config import DEBUG_VALIDATE
from .soup_engine import (BASES, Duplex, SoupConfig, Strand, anneal, decode, fill_gaps,
                          mutate, reverse_complement, split)

logger = logging.getLogger(__name__)

Fragment = Union[Strand, Duplex, None]


class LatticeError(ValueError):
    pass


def lattice_soup(**overrides) -> SoupConfig:
    """Soup norms with the lattice's own defaults for strand length and thresholds."""
    keys = ("initial_length", "min_overlap", "split_min_len", "elongation_prob")
    kwargs = {k: LATTICE[k] for k in keys}
    kwargs.update(overrides)
    return SoupConfig(**kwargs)


@dataclass(frozen=True)
class LatticeConfig:
    soup: SoupConfig = field(default_factory=lattice_soup)
    sites: int = LATTICE["sites"]
    diffusion_rate: float = LATTICE["diffusion_rate"]
    initial_budget: float = LATTICE["initial_budget"]
    occupancy: float = LATTICE["occupancy"]
    canonical: bool = LATTICE["canonical"]

    def __post_init__(self):
        if self.sites < 3:
            raise LatticeError("a lattice needs at least 3 sites")
        if not 0.0 <= self.diffusion_rate <= 0.5:
            raise LatticeError("diffusion_rate must be within [0, 0.5]")
        if self.initial_budget < 0:
            raise LatticeError("initial_budget must be non-negative")
        if not 0.0 <= self.occupancy <= 1.0:
            raise LatticeError("occupancy must be within [0, 1]")


@dataclass(frozen=True)
class DnaCell:
    fragment: Fragment
    budget: float


class Budget:
    """Untyped local nucleotide budget seen as a monomer source."""

    def __init__(self, amount: float):
        self.amount = amount

    def take(self, base: str) -> bool:
        if self.amount < 1.0:
            return False
        self.amount -= 1.0
        return True

    def give(self, base: str) -> None:
        self.amount += 1.0


@dataclass
class DnaLattice:
    fragments: list[Fragment]
    budgets: np.ndarray
    rngs: list[np.random.Generator]
    cycle: int = 0

    @property
    def size(self) -> int:
        return len(self.fragments)

    def cell(self, i: int) -> DnaCell:
        return DnaCell(self.fragments[i], float(self.budgets[i]))

    @classmethod
    def seeded(cls, cfg: LatticeConfig, seed: int) -> "DnaLattice":
        init = make_rng(seed)
        fragments: list[Fragment] = []
        for i in range(cfg.sites):
            if init.random() < cfg.occupancy:
                codes = init.integers(0, 4, size=cfg.soup.initial_length)
                fragments.append(Strand(i, decode(codes)))
            else:
                fragments.append(None)
        budgets = np.full(cfg.sites, float(cfg.initial_budget))
        # cell streams are spawned from a seed derived off the init stream
        cell_seed = int(init.integers(0, 2**63))
        return cls(fragments, budgets, spawn_rngs(cell_seed, cfg.sites))


def pair_blocks(n: int, cycle: int) -> list[tuple[int, int]]:
    """Disjoint neighbour pairs for ``cycle``; on an odd ring one site sits out."""
    start = cycle % 2
    return [((start + 2 * j) % n, (start + 2 * j + 1) % n) for j in range(n // 2)]


def diffuse(budgets: np.ndarray, rate: float) -> np.ndarray:
    return budgets * (1.0 - 2.0 * rate) + rate * (np.roll(budgets, 1) + np.roll(budgets, -1))


def _grow(lat: DnaLattice, i: int, cfg: LatticeConfig) -> None:
    frag = lat.fragments[i]
    if not isinstance(frag, Strand):
        return
    rng = lat.rngs[i]
    frag = mutate(frag, cfg.soup.mutation_rate, rng)
    wants = cfg.soup.elongation_prob >= 1.0 or rng.random() < cfg.soup.elongation_prob
    if wants and lat.budgets[i] >= 1.0:
        lat.budgets[i] -= 1.0
        frag = Strand(frag.id, frag.bases + BASES[int(rng.integers(4))])
    lat.fragments[i] = frag


def _anneal_pair(lat: DnaLattice, left: int, right: int, cfg: LatticeConfig) -> None:
    top, bottom = lat.fragments[left], lat.fragments[right]
    if not (isinstance(top, Strand) and isinstance(bottom, Strand)):
        return
    duplex = anneal(top, bottom, cfg.soup.min_overlap)
    if duplex is not None:
        lat.fragments[left] = duplex
        lat.fragments[right] = None


def _split_pair(lat: DnaLattice, left: int, right: int, cfg: LatticeConfig) -> None:
    for parent, free in ((left, right), (right, left)):
        frag = lat.fragments[parent]
        if isinstance(frag, Duplex) and lat.fragments[free] is None:
            offspring = split(frag, cfg.soup)
            if offspring is not None:
                lat.fragments[parent], lat.fragments[free] = offspring
            return


def step_lattice(lat: DnaLattice, cfg: LatticeConfig) -> DnaLattice:
    """One cycle; the returned lattice takes over the RNG streams of ``lat``."""
    nxt = DnaLattice(list(lat.fragments), lat.budgets.copy(), lat.rngs, lat.cycle + 1)
    n = nxt.size
    condition_b = cfg.soup.condition == "B"

    # cell-local work first, each cell on its own budget
    for i in range(n):
        frag = nxt.fragments[i]
        if isinstance(frag, Strand):
            _grow(nxt, i, cfg)
        elif condition_b and isinstance(frag, Duplex):
            source = Budget(float(nxt.budgets[i]))
            nxt.fragments[i] = fill_gaps(frag, source, cfg.soup.extend_overhangs)
            nxt.budgets[i] = source.amount
    nxt.budgets = diffuse(nxt.budgets, cfg.diffusion_rate)

    # fragments only move inside a pair
    if condition_b:
        blocks = pair_blocks(n, lat.cycle)
        for left, right in blocks:
            _anneal_pair(nxt, left, right, cfg)
        for left, right in blocks:
            _split_pair(nxt, left, right, cfg)

    if DEBUG_VALIDATE:
        if len(nxt.fragments) != n or np.any(nxt.budgets < 0):
            raise RuntimeError(f"cycle {nxt.cycle}: lattice invariant broken")
        for frag in nxt.fragments:
            if isinstance(frag, Duplex) and not frag.is_valid():
                raise RuntimeError(f"cycle {nxt.cycle}: duplex breaks pairing")
    return nxt


# ---------------- Dominant k-mers ----------------

def canonical_kmer(kmer: str) -> str:
    """The smaller of a k-mer and its reverse complement."""
    return min(kmer, reverse_complement(kmer))


def dominant_kmer(cell: DnaCell, k: int, canonical: bool = False) -> str | None:
    """
    Most frequent k-mer over the fragment's strands, the smallest one on
    ties. With ``canonical`` a k-mer and its reverse complement count as one,
    so a strand and its complementary copy get the same answer.
    """
    if k < 1:
        raise LatticeError("k must be at least 1")
    frag = cell.fragment
    if frag is None:
        return None
    seqs = [frag.top.bases, frag.bottom.bases] if isinstance(frag, Duplex) else [frag.bases]
    windows = (s[p:p + k] for s in seqs for p in range(len(s) - k + 1))
    counts = Counter(canonical_kmer(w) for w in windows) if canonical else Counter(windows)
    if not counts:
        return None
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


@dataclass
class KmerSpacetime:
    """Cycle-major dominant k-mer ids (-1 = none), the id -> k-mer table and the top-M legend."""

    k: int
    ids: np.ndarray
    kmers: list[str]
    legend: list[int]

    def legend_map(self) -> dict:
        return {"kmers": {str(i): kmer for i, kmer in enumerate(self.kmers)},
                "top": list(self.legend)}


def run_lattice(initial: DnaLattice, cfg: LatticeConfig, cycles: int, ks: list[int],
                top_m: int = 8) -> dict[int, KmerSpacetime]:
    if cycles < 1:
        raise LatticeError("need at least one cycle")
    n = initial.size
    interned: dict[int, dict[str, int]] = {k: {} for k in ks}
    ids = {k: np.full((cycles, n), -1, dtype=np.int32) for k in ks}

    lat = initial
    for t in range(cycles):
        if t > 0:
            lat = step_lattice(lat, cfg)
        for i in range(n):
            cell = lat.cell(i)
            for k in ks:
                kmer = dominant_kmer(cell, k, cfg.canonical)
                if kmer is not None:
                    table = interned[k]
                    ids[k][t, i] = table.setdefault(kmer, len(table))

    out = {}
    for k in ks:
        kmers = list(interned[k])
        counts = np.bincount(ids[k][ids[k] >= 0].ravel(), minlength=len(kmers))
        ranked = sorted(range(len(kmers)), key=lambda i: (-int(counts[i]), kmers[i]))
        out[k] = KmerSpacetime(k, ids[k], kmers, ranked[:top_m])
    logger.debug("lattice run finished: N=%d T=%d budget left %.3f", n, cycles, float(lat.budgets.sum()))
    return out
