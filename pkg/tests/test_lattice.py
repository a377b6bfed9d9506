from pathlib import Path

import numpy as np
import pytest

from engines.experiment_engine import dnaca_seed
from engines.lattice_engine import (DnaCell, DnaLattice, LatticeConfig, LatticeError, canonical_kmer,
                                    diffuse, dominant_kmer, pair_blocks, run_lattice, step_lattice)
from engines.soup_engine import (Duplex, Pool, SoupConfig, Strand, anneal, fill_gaps,
                                 reverse_complement)
from utils.rng import derive_seeds, spawn_rngs
from utils.validators import parse_config_file


def quiet(**overrides):
    soup = dict(mutation_rate=0.0, elongation_prob=0.0, min_overlap=4, split_min_len=8)
    soup.update(overrides)
    return LatticeConfig(soup=SoupConfig(**soup), sites=6, initial_budget=0.0)


def lattice(fragments, budget=0.0, cycle=0):
    n = len(fragments)
    return DnaLattice(list(fragments), np.full(n, budget), spawn_rngs(0, n), cycle)


def busy(sites):
    return LatticeConfig(soup=SoupConfig(min_overlap=2, split_min_len=4, elongation_prob=0.5),
                         sites=sites, initial_budget=4.0, occupancy=0.6)


# ---------------- Budgets ----------------

def test_uniform_budget_is_a_fixed_point():
    b = np.full(10, 7.5)
    assert np.allclose(diffuse(b, 0.3), b)


def test_diffusion_conserves_total():
    b = np.random.default_rng(0).random(33) * 10
    assert diffuse(b, 0.25).sum() == pytest.approx(b.sum())


def test_diffusion_spreads_one_site_per_cycle():
    b = np.zeros(9)
    b[4] = 1.0
    out = diffuse(b, 0.1)
    assert out[3] == pytest.approx(0.1) and out[5] == pytest.approx(0.1)
    assert out[4] == pytest.approx(0.8)
    assert out[2] == 0.0


def test_diffusion_rate_is_bounded():
    with pytest.raises(LatticeError):
        LatticeConfig(diffusion_rate=0.6)


# ---------------- Pairing ----------------

def test_pair_blocks_alternate_between_cycles():
    assert pair_blocks(6, 0) == [(0, 1), (2, 3), (4, 5)]
    assert pair_blocks(6, 1) == [(1, 2), (3, 4), (5, 0)]
    assert pair_blocks(6, 2) == pair_blocks(6, 0)


def test_pair_blocks_on_odd_ring_leave_one_site_out():
    for cycle in (0, 1):
        blocks = pair_blocks(7, cycle)
        used = [i for pair in blocks for i in pair]
        assert len(blocks) == 3 and len(set(used)) == 6
        assert all((b - a) % 7 == 1 for a, b in blocks)


# ---------------- Local norms ----------------

def test_neighbours_anneal_into_left_site():
    lat = lattice([Strand(0, "ACGT"), Strand(1, "ACGT"), None, None, None, None])
    nxt = step_lattice(lat, quiet())
    assert isinstance(nxt.fragments[0], Duplex)
    assert nxt.fragments[0].top == Strand(0, "ACGT")
    assert nxt.fragments[1] is None
    assert nxt.cycle == 1


def test_neighbours_outside_a_pair_do_not_anneal():
    # sites 1 and 2 only meet on odd cycles
    lat = lattice([None, Strand(0, "ACGT"), Strand(1, "ACGT"), None, None, None])
    nxt = step_lattice(lat, quiet())
    assert nxt.fragments[1] == Strand(0, "ACGT")
    assert nxt.fragments[2] == Strand(1, "ACGT")
    nxt = step_lattice(nxt, quiet())
    assert isinstance(nxt.fragments[1], Duplex) and nxt.fragments[2] is None


def test_condition_a_keeps_strands_apart():
    lat = lattice([Strand(0, "ACGT"), Strand(1, "ACGT"), None, None, None, None])
    nxt = step_lattice(lat, quiet(condition="A"))
    assert nxt.fragments[0] == Strand(0, "ACGT")
    assert nxt.fragments[1] == Strand(1, "ACGT")


def test_duplex_splits_into_free_pair_partner():
    d = anneal(Strand(0, "ACGT"), Strand(1, "ACGT"), 4)
    even = step_lattice(lattice([None, None, d, None, None, None]), quiet(split_min_len=4))
    assert even.fragments[2] == Strand(0, "ACGT")
    assert even.fragments[3] == Strand(1, "ACGT")
    assert even.fragments[1] is None
    odd = step_lattice(lattice([None, None, d, None, None, None], cycle=1), quiet(split_min_len=4))
    assert odd.fragments[2] == Strand(0, "ACGT")
    assert odd.fragments[1] == Strand(1, "ACGT")
    assert odd.fragments[3] is None


def test_duplex_with_occupied_partner_stays():
    d = anneal(Strand(0, "ACGT"), Strand(1, "ACGT"), 4)
    lat = lattice([None, None, d, Strand(6, "AAAA"), None, None])
    nxt = step_lattice(lat, quiet(split_min_len=4))
    assert nxt.fragments[2] == d
    assert nxt.fragments[3] == Strand(6, "AAAA")


def test_gap_filling_draws_local_budget():
    top, bottom = "AAAAAA", "TTTGTT"
    d = anneal(Strand(0, top), Strand(1, bottom), 2)
    lat = lattice([None, None, d, None, None, None], budget=3.0)
    nxt = step_lattice(lat, quiet())
    assert nxt.fragments[2].bottom.bases == "TTTTTT"
    # one base taken, the displaced one handed back
    assert nxt.budgets[2] == pytest.approx(3.0)


def test_growth_pays_from_own_budget_before_diffusion():
    lat = lattice([Strand(0, "AC"), None, None, None, None, None], budget=0.5)
    nxt = step_lattice(lat, quiet(elongation_prob=1.0))
    assert nxt.fragments[0].bases == "AC"
    rich = lattice([Strand(0, "AC"), None, None, None, None, None], budget=2.0)
    nxt = step_lattice(rich, quiet(elongation_prob=1.0))
    assert len(nxt.fragments[0].bases) == 3
    assert nxt.budgets[0] == pytest.approx(0.8 * 1.0 + 0.1 * (2.0 + 2.0))
    assert nxt.budgets.sum() == pytest.approx(11.0)


def test_budgets_never_negative_over_a_run():
    cfg = busy(40)
    lat = DnaLattice.seeded(cfg, 5)
    total = lat.budgets.sum()
    for _ in range(30):
        lat = step_lattice(lat, cfg)
        assert np.all(lat.budgets >= 0)
        assert lat.budgets.sum() <= total + 1e-9
        total = lat.budgets.sum()
        for frag in lat.fragments:
            if isinstance(frag, Duplex):
                assert frag.is_valid()


@pytest.mark.parametrize("seed", [3, 12, 40])
def test_change_stays_inside_light_cone(seed):
    cfg = busy(64)
    base = DnaLattice.seeded(cfg, seed)
    poked = DnaLattice.seeded(cfg, seed)
    poked.fragments[0] = None if poked.fragments[0] is not None else Strand(999, "GGGG")
    poked.budgets[0] += 3.0
    for g in range(1, 21):
        base = step_lattice(base, cfg)
        poked = step_lattice(poked, cfg)
        for i in range(cfg.sites):
            if min(i, cfg.sites - i) > g:
                assert base.fragments[i] == poked.fragments[i], (g, i)
                assert base.budgets[i] == poked.budgets[i], (g, i)


# ---------------- Dominant k-mers ----------------

def test_dominant_kmer_counts_and_ties():
    assert dominant_kmer(DnaCell(Strand(0, "ACGTAC"), 0.0), 2) == "AC"
    # AC and CG tie once each; the smaller k-mer wins
    assert dominant_kmer(DnaCell(Strand(0, "ACG"), 0.0), 2) == "AC"
    assert dominant_kmer(DnaCell(Strand(0, "AAAA"), 0.0), 2) == "AA"
    assert dominant_kmer(DnaCell(Strand(0, "ACGACGT"), 0.0), 3) == "ACG"


def test_dominant_kmer_reads_both_strands_of_duplex():
    d = fill_gaps(anneal(Strand(0, "GGTT"), Strand(1, "AACC"), 4), Pool.uniform(1))
    assert dominant_kmer(DnaCell(d, 0.0), 2) == "AA"


def test_dominant_kmer_on_empty_or_short_cell():
    assert dominant_kmer(DnaCell(None, 1.0), 3) is None
    assert dominant_kmer(DnaCell(Strand(0, "AC"), 0.0), 3) is None
    with pytest.raises(LatticeError):
        dominant_kmer(DnaCell(None, 0.0), 0)


def test_canonical_kmer_merges_reverse_complements():
    assert canonical_kmer("TTTT") == "AAAA"
    assert canonical_kmer("ACGT") == "ACGT"
    assert dominant_kmer(DnaCell(Strand(0, "TTTT"), 0.0), 2, canonical=True) == "AA"
    assert dominant_kmer(DnaCell(Strand(0, "TTTT"), 0.0), 2) == "TT"


def test_strand_and_its_copy_share_canonical_kmer():
    for bases in ("AACAGT", "GGCATTCA", "TCTCGGA"):
        copy = reverse_complement(bases)
        for k in (2, 3, 4):
            a = dominant_kmer(DnaCell(Strand(0, bases), 0.0), k, canonical=True)
            b = dominant_kmer(DnaCell(Strand(1, copy), 0.0), k, canonical=True)
            assert a == b, (bases, k)


def test_run_lattice_shapes_and_legend():
    cfg = LatticeConfig(soup=SoupConfig(min_overlap=2, split_min_len=4), sites=24,
                        initial_budget=2.0, occupancy=0.5)
    out = run_lattice(DnaLattice.seeded(cfg, 3), cfg, cycles=10, ks=[2, 3], top_m=4)
    assert set(out) == {2, 3}
    for k, st in out.items():
        assert st.ids.shape == (10, 24)
        assert st.ids.min() >= -1
        assert st.ids.max() < len(st.kmers)
        assert len(st.legend) <= 4
        legend = st.legend_map()
        assert legend["kmers"] == {str(i): kmer for i, kmer in enumerate(st.kmers)}
        assert all(len(kmer) == k for kmer in legend["kmers"].values())
        assert set(legend["top"]) <= set(range(len(st.kmers)))


def test_run_lattice_is_deterministic():
    cfg = busy(24)
    a = run_lattice(DnaLattice.seeded(cfg, 8), cfg, cycles=12, ks=[3])
    b = run_lattice(DnaLattice.seeded(cfg, 8), cfg, cycles=12, ks=[3])
    assert np.array_equal(a[3].ids, b[3].ids)
    assert a[3].kmers == b[3].kmers


def test_run_needs_a_cycle():
    cfg = quiet()
    with pytest.raises(LatticeError):
        run_lattice(lattice([None] * 6), cfg, cycles=0, ks=[2])


# ---------------- Domains ----------------

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _seeds_with_domain(name):
    cfg = parse_config_file(str(CONFIGS / name), "dnaca")
    assert cfg.seeds == tuple(derive_seeds(99, 10))
    params = dict(cfg.params, ks=[4], domain_width=4, domain_cycles=32)
    return sum(dnaca_seed(params, (), seed).summary["has_domain"][4] for seed in cfg.seeds)


@pytest.mark.slow
def test_copying_lattice_grows_persistent_domains():
    assert _seeds_with_domain("dnaca_b.toml") >= 8


@pytest.mark.slow
def test_non_copying_lattice_rarely_shows_domains():
    assert _seeds_with_domain("dnaca_a.toml") <= 2
