"""
Well-mixed DNA-norm soup.

A pool of free monomers and a population of oriented strands (5'->3').
Strands grow at their 3' end, anneal antiparallel when they share a long
enough complementary run, get their gaps filled from the pool and, once
fully paired, split back into two single strands.

Condition A runs mutation and elongation only; condition B adds
association, gap filling and splitting.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Protocol, Sequence

import numpy as np

from utils.rng import derive_seeds, make_rng
from .config import DEBUG_VALIDATE

logger = logging.getLogger(__name__)

BASES = "ACGT"
_COMPLEMENT = {"A": "T", "T": "A", "C": "G", "G": "C"}
# A=0 C=1 G=2 T=3, so complementary codes sum to 3
_ENCODE = np.full(256, 255, dtype=np.uint8)
for _code, _base in enumerate(BASES):
    _ENCODE[ord(_base)] = _code


class SoupError(ValueError):
    pass


def complement(base: str) -> str:
    try:
        return _COMPLEMENT[base]
    except KeyError:
        raise SoupError(f"not a nucleotide: {base!r}") from None


def reverse_complement(bases: str) -> str:
    return "".join(_COMPLEMENT[b] for b in reversed(bases))


def encode(bases: str) -> np.ndarray:
    codes = _ENCODE[np.frombuffer(bases.encode("ascii"), dtype=np.uint8)]
    if np.any(codes == 255):
        raise SoupError(f"sequence contains non-ACGT symbols: {bases!r}")
    return codes


def decode(codes: np.ndarray) -> str:
    return "".join(BASES[c] for c in codes)


# ---------------- Types ----------------

@dataclass(frozen=True)
class Strand:
    id: int
    bases: str

    def __post_init__(self):
        if not self.bases:
            raise SoupError("a strand holds at least one nucleotide")
        if set(self.bases) - set(BASES):
            raise SoupError(f"strand {self.id} contains non-ACGT symbols")

    def __len__(self) -> int:
        return len(self.bases)


@dataclass(frozen=True)
class Anneal:
    offset: int
    run_start: int
    run_len: int


@dataclass(frozen=True)
class Duplex:
    """
    ``bottom`` runs antiparallel under ``top``: top index i faces bottom index
    len(bottom) - 1 - (i - offset). ``pairing`` covers the overlap, one flag
    per top index from ``overlap[0]``.
    """

    top: Strand
    bottom: Strand
    offset: int
    pairing: tuple[bool, ...]

    @property
    def overlap(self) -> tuple[int, int]:
        lo = max(0, self.offset)
        hi = min(len(self.top), self.offset + len(self.bottom))
        return lo, max(lo, hi)

    def bottom_index(self, i: int) -> int:
        return len(self.bottom) - 1 - (i - self.offset)

    @property
    def paired_length(self) -> int:
        return sum(self.pairing)

    @property
    def fully_paired(self) -> bool:
        return bool(self.pairing) and all(self.pairing)

    def is_valid(self) -> bool:
        lo, hi = self.overlap
        if len(self.pairing) != hi - lo:
            return False
        for k, paired in enumerate(self.pairing):
            i = lo + k
            if paired and _COMPLEMENT[self.top.bases[i]] != self.bottom.bases[self.bottom_index(i)]:
                return False
        return True


class MonomerSource(Protocol):
    def take(self, base: str) -> bool: ...

    def give(self, base: str) -> None: ...


@dataclass
class Pool:
    counts: dict[str, int] = field(default_factory=lambda: {b: 0 for b in BASES})

    @classmethod
    def uniform(cls, per_base: int) -> "Pool":
        return cls({b: per_base for b in BASES})

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def take(self, base: str) -> bool:
        if self.counts.get(base, 0) <= 0:
            return False
        self.counts[base] -= 1
        return True

    def give(self, base: str) -> None:
        self.counts[base] = self.counts.get(base, 0) + 1

    def draw(self, rng: np.random.Generator) -> str | None:
        """Remove one monomer chosen with probability proportional to its count."""
        total = self.total
        if total == 0:
            return None
        pick = int(rng.integers(total))
        for base in BASES:
            if pick < self.counts[base]:
                self.counts[base] -= 1
                return base
            pick -= self.counts[base]
        raise AssertionError("unreachable")


@dataclass(frozen=True)
class SoupConfig:
    mutation_rate: float = 1e-4
    cycles: int = 400
    min_overlap: int = 4
    split_min_len: int = 8
    condition: str = "B"
    rng_seed: int = 0
    pool_per_base: int = 2500
    initial_strands: int = 50
    initial_length: int = 4
    association_pairs: int = 64
    elongation_prob: float = 1.0
    extend_overhangs: bool = True

    def __post_init__(self):
        object.__setattr__(self, "condition", str(self.condition).upper())
        if self.condition not in ("A", "B"):
            raise SoupError("condition must be A or B")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise SoupError("mutation_rate must be within [0, 1]")
        if not 0.0 <= self.elongation_prob <= 1.0:
            raise SoupError("elongation_prob must be within [0, 1]")
        if self.min_overlap < 1:
            raise SoupError("min_overlap must be at least 1")
        if self.split_min_len < 1 or self.cycles < 0 or self.initial_length < 1:
            raise SoupError("split_min_len and initial_length must be positive, cycles non-negative")


@dataclass
class Soup:
    pool: Pool
    strands: list[Strand]
    duplexes: list[Duplex]
    rng: np.random.Generator
    cycle: int = 0
    starvation: int = 0
    associations: int = 0
    splits: int = 0

    @property
    def mass(self) -> int:
        return (self.pool.total
                + sum(len(s) for s in self.strands)
                + sum(len(d.top) + len(d.bottom) for d in self.duplexes))

    def all_strands(self) -> list[Strand]:
        out = list(self.strands)
        for d in self.duplexes:
            out.extend((d.top, d.bottom))
        return out

    def snapshot(self) -> tuple[tuple[int, str], ...]:
        return tuple(sorted((s.id, s.bases) for s in self.all_strands()))


def new_soup(cfg: SoupConfig, rng_seed: int | None = None) -> Soup:
    rng = make_rng(cfg.rng_seed if rng_seed is None else rng_seed)
    strands = []
    for sid in range(cfg.initial_strands):
        codes = rng.integers(0, 4, size=cfg.initial_length)
        strands.append(Strand(sid, decode(codes)))
    return Soup(Pool.uniform(cfg.pool_per_base), strands, [], rng)


# ---------------- Norms ----------------

def elongate(s: Strand, soup: Soup) -> Strand:
    base = soup.pool.draw(soup.rng)
    if base is None:
        soup.starvation += 1
        return s
    return replace(s, bases=s.bases + base)


def find_best_anneal(s1: Strand | str, s2: Strand | str, min_overlap: int) -> Anneal | None:
    """
    Best antiparallel alignment of s2 under s1, scored by the longest
    contiguous complementary run; ties go to the smaller |offset|, then the
    smaller offset. ``run_start`` indexes s1.
    """
    top = encode(s1.bases if isinstance(s1, Strand) else s1).astype(np.int16)
    rb = encode(s2.bases if isinstance(s2, Strand) else s2)[::-1].astype(np.int16)
    n, m = len(top), len(rb)

    # skew so that each column is one diagonal (fixed offset = n - 1 - column)
    match = (top[:, None] + rb[None, :]) == 3
    skew = np.zeros((n, n + m - 1), dtype=bool)
    rows = np.arange(n)[:, None]
    cols = (n - 1 - np.arange(n))[:, None] + np.arange(m)[None, :]
    skew[rows, cols] = match

    counts = np.cumsum(skew, axis=0, dtype=np.int32)
    resets = np.maximum.accumulate(np.where(skew, 0, counts), axis=0)
    runs = counts - resets

    per_column = runs.max(axis=0)
    best = int(per_column.max())
    if best < min_overlap or best == 0:
        return None
    columns = np.flatnonzero(per_column == best)
    offsets = n - 1 - columns
    column = min(zip(offsets, columns), key=lambda oc: (abs(int(oc[0])), int(oc[0])))[1]
    end = int(np.argmax(runs[:, column]))
    return Anneal(offset=int(n - 1 - column), run_start=end - best + 1, run_len=best)


def pairing_mask(top: str, bottom: str, offset: int) -> tuple[bool, ...]:
    lo = max(0, offset)
    hi = min(len(top), offset + len(bottom))
    return tuple(_COMPLEMENT[top[i]] == bottom[len(bottom) - 1 - (i - offset)] for i in range(lo, hi))


def anneal(s1: Strand, s2: Strand, min_overlap: int) -> Duplex | None:
    hit = find_best_anneal(s1, s2, min_overlap)
    if hit is None:
        return None
    return Duplex(s1, s2, hit.offset, pairing_mask(s1.bases, s2.bases, hit.offset))


def fill_gaps(d: Duplex, source: MonomerSource, extend: bool = True) -> Duplex:
    """
    Repair unpaired overlap positions (5'->3' on top) in the shorter strand,
    the top strand acting as template on equal lengths; the displaced base
    goes back to the source. With ``extend``, each strand then grows its 3'
    end along the partner's unpaired 5' overhang. Starved positions stay
    unpaired.
    """
    top = list(d.top.bases)
    bottom = list(d.bottom.bases)
    offset = d.offset
    lo, hi = d.overlap
    paired = {lo + k: flag for k, flag in enumerate(d.pairing)}
    repair_bottom = len(bottom) <= len(top)

    for i in range(lo, hi):
        if paired[i]:
            continue
        j = len(bottom) - 1 - (i - offset)
        if repair_bottom:
            needed, old = _COMPLEMENT[top[i]], bottom[j]
        else:
            needed, old = _COMPLEMENT[bottom[j]], top[i]
        if not source.take(needed):
            continue
        source.give(old)
        if repair_bottom:
            bottom[j] = needed
        else:
            top[i] = needed
        paired[i] = True

    if extend:
        # bottom 3' end sits at top index `offset`; walk it over top's 5' overhang
        while offset > 0:
            needed = _COMPLEMENT[top[offset - 1]]
            if not source.take(needed):
                break
            bottom.append(needed)
            offset -= 1
            paired[offset] = True
        # top 3' end walks over bottom's 5' overhang
        while len(top) < offset + len(bottom):
            i = len(top)
            needed = _COMPLEMENT[bottom[len(bottom) - 1 - (i - offset)]]
            if not source.take(needed):
                break
            top.append(needed)
            paired[i] = True

    new_lo = max(0, offset)
    new_hi = min(len(top), offset + len(bottom))
    pairing = tuple(paired.get(i, False) for i in range(new_lo, new_hi))
    return Duplex(replace(d.top, bases="".join(top)), replace(d.bottom, bases="".join(bottom)),
                  offset, pairing)


def split(d: Duplex, cfg: SoupConfig) -> tuple[Strand, Strand] | None:
    if d.fully_paired and d.paired_length >= cfg.split_min_len:
        return d.top, d.bottom
    return None


def mutate(s: Strand, mu: float, rng: np.random.Generator) -> Strand:
    """Substitute each base with probability mu by one of the three others."""
    if not 0.0 <= mu <= 1.0:
        raise SoupError("mutation rate must be within [0, 1]")
    hits = np.flatnonzero(rng.random(len(s)) < mu)
    if hits.size == 0:
        return s
    codes = encode(s.bases)
    codes[hits] = (codes[hits] + rng.integers(1, 4, size=hits.size)) % 4
    return replace(s, bases=decode(codes))


# ---------------- Cycle ----------------

def _associate(soup: Soup, cfg: SoupConfig) -> None:
    n = len(soup.strands)
    wanted = min(n, cfg.association_pairs, n * (n - 1) // 2)
    chosen: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    while len(chosen) < wanted:
        i, j = (int(x) for x in soup.rng.choice(n, size=2, replace=False))
        key = (min(i, j), max(i, j))
        if key not in seen:
            seen.add(key)
            chosen.append((i, j))

    bound: set[int] = set()
    for i, j in chosen:
        if i in bound or j in bound:
            continue
        duplex = anneal(soup.strands[i], soup.strands[j], cfg.min_overlap)
        if duplex is not None:
            soup.duplexes.append(duplex)
            bound.update((i, j))
            soup.associations += 1
    soup.strands = [s for k, s in enumerate(soup.strands) if k not in bound]


def validate_soup(soup: Soup, expected_mass: int) -> None:
    if soup.mass != expected_mass:
        raise RuntimeError(f"cycle {soup.cycle}: mass {soup.mass} != {expected_mass}")
    for d in soup.duplexes:
        if not d.is_valid():
            raise RuntimeError(f"cycle {soup.cycle}: duplex {d.top.id}/{d.bottom.id} breaks pairing")


def cycle(soup: Soup, cfg: SoupConfig) -> Soup:
    mass_before = soup.mass if DEBUG_VALIDATE else 0

    soup.strands = [mutate(s, cfg.mutation_rate, soup.rng) for s in soup.strands]
    grown = []
    for s in soup.strands:
        if cfg.elongation_prob >= 1.0 or soup.rng.random() < cfg.elongation_prob:
            s = elongate(s, soup)
        grown.append(s)
    soup.strands = grown

    if cfg.condition == "B":
        _associate(soup, cfg)
        soup.duplexes = [fill_gaps(d, soup.pool, cfg.extend_overhangs) for d in soup.duplexes]
        remaining = []
        for d in soup.duplexes:
            offspring = split(d, cfg)
            if offspring is None:
                remaining.append(d)
            else:
                soup.strands.extend(offspring)
                soup.splits += 1
        soup.duplexes = remaining

    soup.cycle += 1
    if DEBUG_VALIDATE:
        validate_soup(soup, mass_before)
    return soup


# ---------------- Experiment harness ----------------

@dataclass
class SoupRun:
    seed: int
    condition: str
    snapshots: list[tuple[tuple[int, str], ...]]
    mass: list[int]
    starvation: int = 0
    associations: int = 0
    splits: int = 0


def run_soup(cfg: SoupConfig, seed: int) -> SoupRun:
    soup = new_soup(cfg, seed)
    snapshots = [soup.snapshot()]
    mass = [soup.mass]
    for _ in range(cfg.cycles):
        cycle(soup, cfg)
        snapshots.append(soup.snapshot())
        mass.append(soup.mass)
    logger.debug("soup seed=%d condition=%s: %d strands, %d duplexes, %d splits, %d starved",
                  seed, cfg.condition, len(soup.strands), len(soup.duplexes),
                  soup.splits, soup.starvation)
    return SoupRun(seed, cfg.condition, snapshots, mass,
                   soup.starvation, soup.associations, soup.splits)


def run_experiment(cfg: SoupConfig, n_seeds: int, jobs: int = 1,
                   seeds: Sequence[int] | None = None) -> list[SoupRun]:
    """One run per seed derived from ``cfg.rng_seed`` (or the explicit ``seeds``)."""
    if seeds is None:
        if n_seeds < 1:
            raise SoupError("need at least one seed")
        seeds = derive_seeds(cfg.rng_seed, n_seeds)
    logger.info("soup condition %s: %d seeds x %d cycles", cfg.condition, len(seeds), cfg.cycles)
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(partial(run_soup, cfg), seeds))
    return [run_soup(cfg, s) for s in seeds]
