"""
Runs a validated experiment config and writes its artifacts.

Seeds fan out across a process pool; each worker runs one seed end to end
and hands back the bytes of its files, which the coordinator writes. One
seed writes straight into the output directory, several seeds write into
``seed_<s>/`` sub-directories next to the cross-seed summaries.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Any

import numpy as np

from metrics.information import entropy_series, mi_matrix
from metrics.motifs import MotifStats, cross_seed_fraction, motif_stats, persistent_domains
from metrics.population import population_series, value_histogram
from utils import exporters
from utils.validators import ExperimentConfig
from .config import DEFAULT_JOBS
from .gated_engine import BoolWorld, GateConfig, run_gated
from .lattice_engine import DnaLattice, LatticeConfig, run_lattice
from .norms import NormId, make_norm_map, parse_patch
from .robustness_engine import SweepSetup, robustness_sweep
from .soup_engine import SoupConfig, run_soup
from .world1d_engine import DenseSeed, ExplicitSeed, SparseSeed, run_1d, seed_world
from .world2d_engine import render_angle_field, seed_world_2d, step_2d

logger = logging.getLogger(__name__)


@dataclass
class SeedResult:
    seed: int
    files: dict[str, bytes] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)


# ---------------- Shared metric tables ----------------

def spacetime_metric_rows(rows: np.ndarray) -> list[tuple[str, int, float]]:
    """Metrics computable from a stored spacetime alone (no run log)."""
    alive = rows != 0
    births = np.zeros(rows.shape[0], dtype=np.int64)
    deaths = np.zeros(rows.shape[0], dtype=np.int64)
    births[1:] = np.sum(alive[1:] & ~alive[:-1], axis=1)
    deaths[1:] = np.sum(~alive[1:] & alive[:-1], axis=1)
    out: list[tuple[str, int, float]] = []
    for name, series in (("living_cells", alive.sum(axis=1)), ("births", births),
                         ("deaths", deaths)):
        out.extend((name, g, int(v)) for g, v in enumerate(series))
    out.extend(("entropy", g, float(h)) for g, h in enumerate(entropy_series(rows)))
    return out


def spacetime_files(rows: np.ndarray, formats: tuple[str, ...]) -> dict[str, bytes]:
    files: dict[str, bytes] = {}
    if "csv" in formats:
        files["spacetime.csv"] = exporters.spacetime_to_csv(rows).encode()
        files["metrics.csv"] = exporters.metric_csv(spacetime_metric_rows(rows)).encode()
        files["histogram.csv"] = exporters.histogram_csv(value_histogram(rows)).encode()
        files["mi_matrix.csv"] = exporters.matrix_csv(mi_matrix(rows)).encode()
    if "ppm" in formats:
        files["spacetime.ppm"] = exporters.render_spacetime(rows, "signed")
    if "bin" in formats:
        files["spacetime.bin"] = exporters.spacetime_to_bytes(rows)
    return files


# ---------------- Per-kind workers ----------------

def _seed_spec(p: dict[str, Any]):
    if p["init"] == "dense":
        return DenseSeed(p["fill"], p["value_min"], p["value_max"])
    if p["init"] == "explicit":
        values = tuple(p["values"])
        positions = tuple(p["positions"]) if p["positions"] is not None else None
        offset = p["offset"] if p["offset"] is not None else (p["length"] - len(values)) // 2
        return ExplicitSeed(values, positions, offset)
    region = tuple(p["region"]) if p["region"] is not None else None
    return SparseSeed(p["genes"], p["value_min"], p["value_max"], region, p["region_width"])


def _norm_map(p: dict[str, Any]) -> tuple[NormId, ...]:
    if p["patches"]:
        return make_norm_map(p["length"], [parse_patch(s) for s in p["patches"]])
    return (NormId.parse(p["norm"]),) * p["length"]


def run1d_seed(p: dict[str, Any], formats: tuple[str, ...], seed: int) -> SeedResult:
    world = seed_world(p["length"], _seed_spec(p), seed, _norm_map(p), p["boundary"])
    st = run_1d(world, p["generations"])
    files = spacetime_files(st.rows, formats)
    if "csv" in formats:
        files["population.csv"] = exporters.metric_csv(population_series(st).as_rows()).encode()
    living = st.rows != 0
    return SeedResult(seed, files, {"living_first": int(living[0].sum()),
                                    "living_last": int(living[-1].sum())})


def run2d_seed(p: dict[str, Any], formats: tuple[str, ...], frames: bool, frame_every: int,
               seed: int) -> SeedResult:
    world = seed_world_2d(p["width"], p["height"], p["fill"], p["value_max"], seed,
                          NormId.parse(p["norm"]))
    files: dict[str, bytes] = {}
    living, collisions, flat = [], [0], []
    for g in range(p["generations"]):
        if g > 0:
            world, c = step_2d(world)
            collisions.append(c)
        living.append(int(world.occupied.sum()))
        if "bin" in formats:
            flat.append(world.cells.reshape(-1))
        if frames and "ppm" in formats and g % frame_every == 0:
            files[f"frames/frame_{g:05d}.ppm"] = exporters.ppm_bytes(render_angle_field(world))
    if "csv" in formats:
        rows = [("living_cells", g, v) for g, v in enumerate(living)]
        rows += [("collisions", g, v) for g, v in enumerate(collisions)]
        files["population.csv"] = exporters.metric_csv(rows).encode()
    if "ppm" in formats:
        files["final.ppm"] = exporters.ppm_bytes(render_angle_field(world))
    if "bin" in formats:
        files["trajectory.bin"] = exporters.spacetime_to_bytes(np.vstack(flat))
    return SeedResult(seed, files, {"living_last": living[-1]})


def runbool_seed(p: dict[str, Any], formats: tuple[str, ...], seed: int) -> SeedResult:
    gate = GateConfig(rule=p["rule"], threshold=p["threshold"])
    spacetime, decay = run_gated(BoolWorld.random(p["length"], p["density"], seed), gate,
                                 p["generations"])
    files: dict[str, bytes] = {}
    if "csv" in formats:
        files["spacetime.csv"] = exporters.spacetime_to_csv(spacetime).encode()
        files["decay.csv"] = exporters.spacetime_to_csv(decay).encode()
        rows = [("active_cells", g, int(v)) for g, v in enumerate(spacetime.sum(axis=1))]
        rows += [("decays", g, int(v)) for g, v in enumerate(decay.sum(axis=1))]
        files["activity.csv"] = exporters.metric_csv(rows).encode()
    if "ppm" in formats:
        files["spacetime.ppm"] = exporters.render_spacetime(spacetime, "bool", decay=decay)
        files["spacetime.pbm"] = exporters.pbm_bytes(spacetime)
        files["decay.pbm"] = exporters.pbm_bytes(decay)
    if "bin" in formats:
        files["spacetime.bin"] = exporters.spacetime_to_bytes(spacetime)
        files["decay.bin"] = exporters.spacetime_to_bytes(decay)
    return SeedResult(seed, files, {"active_last": int(spacetime[-1].sum()),
                                    "decays": int(decay.sum())})


def soup_config(p: dict[str, Any], seed: int = 0, **overrides) -> SoupConfig:
    keys = ("mutation_rate", "min_overlap", "split_min_len", "condition", "initial_length",
            "elongation_prob", "extend_overhangs", "cycles", "pool_per_base",
            "initial_strands", "association_pairs")
    kwargs = {k: p[k] for k in keys if k in p}
    kwargs.update(overrides)
    return SoupConfig(rng_seed=seed, **kwargs)


def dnasoup_seed(p: dict[str, Any], formats: tuple[str, ...], seed: int) -> SeedResult:
    run = run_soup(soup_config(p, seed), seed)
    stats = [motif_stats(run.snapshots, k, p["tau"]) for k in p["ks"]]
    files: dict[str, bytes] = {}
    if "csv" in formats:
        files["snapshots.csv.gz"] = exporters.snapshots_gz(run.snapshots)
        rows = [row for s in stats for row in s.as_rows()]
        rows += [("mass", t, m) for t, m in enumerate(run.mass)]
        files["motifs.csv"] = exporters.metric_csv(rows).encode()
    if "bin" in formats:
        counts = np.column_stack([c for s in stats for c in (s.windows, s.singletons)])
        files["motif_counts.bin"] = exporters.spacetime_to_bytes(counts)
    return SeedResult(seed, files, {"stats": stats, "splits": run.splits,
                                    "starvation": run.starvation})


def dnaca_seed(p: dict[str, Any], formats: tuple[str, ...], seed: int) -> SeedResult:
    cfg = LatticeConfig(soup=soup_config(p, seed, cycles=p["cycles"]), sites=p["sites"],
                        diffusion_rate=p["diffusion_rate"], initial_budget=p["initial_budget"],
                        occupancy=p["occupancy"], canonical=p["canonical"])
    result = run_lattice(DnaLattice.seeded(cfg, seed), cfg, p["cycles"], p["ks"], p["top_m"])
    files: dict[str, bytes] = {}
    domain_rows = []
    has_domain = {}
    for k, ks in result.items():
        domains = persistent_domains(ks.ids, p["domain_width"], p["domain_cycles"])
        has_domain[k] = bool(domains)
        domain_rows += [(k, d.kmer_id, ks.kmers[d.kmer_id], d.first_cycle, d.last_cycle, d.max_width)
                        for d in domains]
        if "csv" in formats:
            files[f"dominant_k{k}.csv"] = exporters.spacetime_to_csv(ks.ids).encode()
            files[f"legend_k{k}.json"] = exporters.json_bytes(ks.legend_map())
        if "ppm" in formats:
            files[f"dominant_k{k}.ppm"] = exporters.render_spacetime(ks.ids, "kmer", legend=ks.legend)
        if "bin" in formats:
            files[f"dominant_k{k}.bin"] = exporters.spacetime_to_bytes(ks.ids)
    if "csv" in formats:
        files["domains.csv"] = exporters.table_csv(
            ("k", "kmer_id", "kmer", "first_cycle", "last_cycle", "max_width"), domain_rows).encode()
    return SeedResult(seed, files, {"has_domain": has_domain})


# ---------------- Engine ----------------

class ExperimentEngine:
    """
    Runs one config. ``run()`` writes every artifact plus ``manifest.json``
    and returns the manifest; ``summary`` then holds the headline numbers.
    """

    def __init__(self, config: ExperimentConfig, out_dir: str, jobs: int | None = None):
        self.config = config
        self.out_dir = out_dir
        self.jobs = jobs or config.jobs or DEFAULT_JOBS
        self.summary: dict[str, Any] = {}

    def _worker(self):
        p, fmt = self.config.params, self.config.formats
        kind = self.config.kind
        if kind == "run1d":
            return partial(run1d_seed, p, fmt)
        if kind == "run2d":
            return partial(run2d_seed, p, fmt, self.config.frames, self.config.frame_every)
        if kind == "runbool":
            return partial(runbool_seed, p, fmt)
        if kind == "dnasoup":
            return partial(dnasoup_seed, p, fmt)
        if kind == "dnaca":
            return partial(dnaca_seed, p, fmt)
        raise ValueError(f"kind {kind} has no per-seed worker")

    def _run_seeds(self) -> list[SeedResult]:
        worker = self._worker()
        seeds = list(self.config.seeds)
        if self.jobs > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=min(self.jobs, len(seeds))) as pool:
                return list(pool.map(worker, seeds))
        return [worker(s) for s in seeds]

    def run(self) -> dict:
        cfg = self.config
        logger.info("running %s: %d seed(s), formats %s, jobs %d -> %s",
                    cfg.kind, len(cfg.seeds), ",".join(cfg.formats), self.jobs, self.out_dir)
        writer = exporters.ArtifactWriter(self.out_dir)

        if cfg.kind == "robustness":
            self._robustness(writer)
        else:
            results = self._run_seeds()
            several = len(results) > 1
            for res in results:
                prefix = f"seed_{res.seed}/" if several else ""
                for name, data in res.files.items():
                    writer.write(prefix + name, data)
            if cfg.kind == "dnasoup":
                self._soup_summary(writer, results)
            elif cfg.kind == "dnaca":
                self._lattice_summary(writer, results)
            else:
                self.summary["seeds"] = {str(r.seed): r.summary for r in results}

        doc = exporters.manifest(cfg.kind, cfg.text, cfg.seeds, cfg.formats, writer.artifacts)
        writer.write("manifest.json", exporters.json_bytes(doc))
        logger.info("%s finished: %d artifacts", cfg.kind, len(doc["artifacts"]))
        return doc

    def _robustness(self, writer: exporters.ArtifactWriter) -> None:
        p = self.config.params
        setup = SweepSetup(p["length"], p["generations"], tuple(p["organism"]),
                           NormId.parse(p["norm"]), p["boundary"], p["survival_from"])
        report = robustness_sweep(setup, p["values"], p["distances"], self.jobs)
        self.summary = {"period": report.period, "survival_rate": report.survival_rate,
                        "trials": len(report.rows)}
        formats = self.config.formats
        if "csv" in formats:
            writer.write("robustness.csv", exporters.table_csv(
                ("intruder_value", "initial_distance", "survived", "generations_to_verdict"),
                report.as_rows()))
        if "ppm" in formats:
            writer.write("control.ppm", exporters.render_spacetime(report.control, "signed"))
        if "bin" in formats:
            writer.write("control.bin", exporters.spacetime_to_bytes(report.control))

    def _soup_summary(self, writer: exporters.ArtifactWriter, results: list[SeedResult]) -> None:
        rows = []
        terminal = {}
        for i, k in enumerate(self.config.params["ks"]):
            per_seed: list[MotifStats] = [r.summary["stats"][i] for r in results]
            fraction = cross_seed_fraction(per_seed)
            terminal[str(k)] = float(fraction.p[-1])
            rows += fraction.as_rows()
        self.summary = {"condition": self.config.params["condition"], "terminal_p": terminal,
                        "splits": sum(r.summary["splits"] for r in results)}
        if "csv" in self.config.formats:
            writer.write("p_kt.csv", exporters.run_fraction_csv(rows))
        starved = sum(r.summary["starvation"] for r in results)
        if starved:
            logger.warning("monomer pool ran dry %d times across seeds", starved)

    def _lattice_summary(self, writer: exporters.ArtifactWriter, results: list[SeedResult]) -> None:
        rows = []
        for k in self.config.params["ks"]:
            hits = sum(r.summary["has_domain"][k] for r in results)
            rows.append((k, hits, len(results)))
        self.summary = {"seeds_with_domain": {str(k): hits for k, hits, _ in rows},
                        "seeds": len(results)}
        if "csv" in self.config.formats:
            writer.write("domain_summary.csv",
                         exporters.table_csv(("k", "seeds_with_domain", "seeds"), rows))


def analyze_spacetime(path: str, out_dir: str, formats: tuple[str, ...] = ("csv",)) -> dict:
    """Metrics of a stored 1D spacetime (CSV or SYMB1)."""
    rows = exporters.load_spacetime(path)
    logger.info("analyzing %s: G=%d L=%d", path, rows.shape[0], rows.shape[1])
    writer = exporters.ArtifactWriter(out_dir)
    if "csv" in formats:
        writer.write("metrics.csv", exporters.metric_csv(spacetime_metric_rows(rows)))
        writer.write("histogram.csv", exporters.histogram_csv(value_histogram(rows)))
        writer.write("mi_matrix.csv", exporters.matrix_csv(mi_matrix(rows)))
    if "ppm" in formats:
        writer.write("spacetime.ppm", exporters.render_spacetime(rows, "signed"))
    if "bin" in formats:
        writer.write("spacetime.bin", exporters.spacetime_to_bytes(rows))
    with open(path, "rb") as f:
        source = f.read()
    doc = exporters.manifest("analyze", source, [], formats, writer.artifacts)
    doc["input"] = os.path.basename(path)
    writer.write("manifest.json", exporters.json_bytes(doc))
    return doc
