"""
Artifact writers and readers: spacetime CSV and SYMB1 binary, PPM/PBM
images, gzip strand snapshots, long-format metric tables and the run
manifest. Byte layouts are documented in docs/formats.md.
"""

from __future__ import annotations

import csv
import gzip
import hashlib
import io
import json
import logging
import os
import struct
from typing import Iterable, Sequence

import numpy as np

from config import TOOL_NAME, TOOL_VERSION
from utils.palettes import BLACK, CATEGORICAL, GRAY, RED, WHITE, signed_colors

logger = logging.getLogger(__name__)

SYMB1_MAGIC = b"SYMB1"
_SYMB1_HEADER = struct.Struct("<5sII")


class FormatError(ValueError):
    pass


# ---------------- Spacetime matrices ----------------

def spacetime_to_csv(matrix: np.ndarray) -> str:
    """One line per generation, cells comma separated, no header."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
    return "".join(",".join(str(int(v)) for v in row) + "\n" for row in m)


def spacetime_from_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip()]
    if not rows:
        raise FormatError("empty spacetime CSV")
    try:
        matrix = [[int(v) for v in line.split(",")] for line in rows]
    except ValueError as e:
        raise FormatError(f"bad spacetime CSV: {e}") from None
    widths = {len(r) for r in matrix}
    if len(widths) != 1:
        raise FormatError("spacetime CSV rows differ in length")
    return np.array(matrix, dtype=np.int64)


def spacetime_to_bytes(matrix: np.ndarray) -> bytes:
    """``SYMB1`` magic, u32 L, u32 G, then G*L little-endian i32 row-major."""
    m = np.atleast_2d(np.asarray(matrix, dtype=np.int64))
    if m.size and (m.min() < np.iinfo(np.int32).min or m.max() > np.iinfo(np.int32).max):
        raise FormatError("values do not fit 32-bit cells")
    g, length = m.shape
    return _SYMB1_HEADER.pack(SYMB1_MAGIC, length, g) + m.astype("<i4").tobytes()


def spacetime_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < _SYMB1_HEADER.size:
        raise FormatError("truncated SYMB1 header")
    magic, length, g = _SYMB1_HEADER.unpack_from(data)
    if magic != SYMB1_MAGIC:
        raise FormatError("not a SYMB1 file")
    body = data[_SYMB1_HEADER.size:]
    if len(body) != 4 * length * g:
        raise FormatError(f"SYMB1 body holds {len(body)} bytes, expected {4 * length * g}")
    return np.frombuffer(body, dtype="<i4").reshape(g, length).astype(np.int64)


def load_spacetime(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if data.startswith(SYMB1_MAGIC):
        return spacetime_from_bytes(data)
    return spacetime_from_csv(data.decode("utf-8"))


# ---------------- Images ----------------

def ppm_bytes(image: np.ndarray) -> bytes:
    img = np.asarray(image, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] == 0 or img.shape[1] == 0:
        raise FormatError("PPM needs a non-empty (H, W, 3) image")
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + np.ascontiguousarray(img).tobytes()


def pbm_bytes(bits: np.ndarray) -> bytes:
    """P4 bitmap, 1 = black, rows padded to whole bytes."""
    b = np.atleast_2d(np.asarray(bits) != 0)
    h, w = b.shape
    packed = np.packbits(b.astype(np.uint8), axis=1)
    return f"P4\n{w} {h}\n".encode("ascii") + packed.tobytes()


def kmer_colors(ids: np.ndarray, legend: Sequence[int]) -> np.ndarray:
    """Top-M ids get categorical colours, other k-mers gray, no k-mer black."""
    m = np.asarray(ids)
    rgb = np.empty(m.shape + (3,), dtype=np.uint8)
    rgb[...] = GRAY
    rgb[m < 0] = BLACK
    for rank, kmer_id in enumerate(legend):
        rgb[m == kmer_id] = CATEGORICAL[rank % len(CATEGORICAL)]
    return rgb


def bool_colors(cells: np.ndarray, decay: np.ndarray | None = None) -> np.ndarray:
    """Active cells black on white; decayed cells red."""
    m = np.asarray(cells) != 0
    rgb = np.empty(m.shape + (3,), dtype=np.uint8)
    rgb[...] = WHITE
    rgb[m] = BLACK
    if decay is not None:
        rgb[np.asarray(decay) != 0] = RED
    return rgb


def render_spacetime(matrix: np.ndarray, palette: str = "signed", legend: Sequence[int] = (),
                     decay: np.ndarray | None = None) -> bytes:
    """
    One pixel per cell, generation g on image row g.

    Palettes: ``signed`` (gene values), ``kmer`` (dominant k-mer ids with
    the top-M ``legend``), ``bool`` (with optional ``decay`` overlay) and
    ``angle`` (an (H, W, 2) vector field).
    """
    m = np.asarray(matrix)
    if m.size == 0:
        raise FormatError("cannot render an empty matrix")
    if palette == "signed":
        image = signed_colors(np.atleast_2d(m))
    elif palette == "kmer":
        image = kmer_colors(np.atleast_2d(m), legend)
    elif palette == "bool":
        image = bool_colors(np.atleast_2d(m), decay)
    elif palette == "angle":
        from engines.world2d_engine import World2D, render_angle_field
        image = render_angle_field(World2D(m))
    else:
        raise FormatError(f"unknown palette {palette!r}")
    return ppm_bytes(image)


# ---------------- Tables ----------------

def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    return v


def metric_csv(rows: Iterable[tuple[str, int, float]]) -> str:
    return _csv_text(("metric", "generation", "value"), rows)


def histogram_csv(histograms: Sequence[dict[int, int]]) -> str:
    rows = ((g, value, count) for g, h in enumerate(histograms) for value, count in sorted(h.items()))
    return _csv_text(("generation", "value", "count"), rows)


def matrix_csv(matrix: np.ndarray) -> str:
    m = np.atleast_2d(matrix)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in m)


def run_fraction_csv(rows: Iterable[tuple[int, int, float, float, float]]) -> str:
    return _csv_text(("k", "t", "P", "lower", "upper"), rows)


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    return _csv_text(header, rows)


def snapshots_gz(snapshots: Sequence[Iterable[tuple[int, str]]]) -> bytes:
    """Gzipped ``cycle,strand_id,sequence`` rows; mtime pinned for reproducible bytes."""
    rows = ((t, sid, seq) for t, snap in enumerate(snapshots) for sid, seq in snap)
    text = _csv_text(("cycle", "strand_id", "sequence"), rows).encode("utf-8")
    buf = io.BytesIO()
    with gzip.GzipFile(fileobj=buf, mode="wb", mtime=0) as gz:
        gz.write(text)
    return buf.getvalue()


def read_snapshots_gz(data: bytes) -> list[list[tuple[int, str]]]:
    text = gzip.decompress(data).decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    next(reader, None)
    out: list[list[tuple[int, str]]] = []
    for cycle, sid, seq in reader:
        t = int(cycle)
        while len(out) <= t:
            out.append([])
        out[t].append((int(sid), seq))
    return out


def json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


# ---------------- Output directory ----------------

class ArtifactWriter:
    """Writes files under one run directory and remembers what it wrote."""

    def __init__(self, root: str):
        self.root = root
        self.artifacts: list[str] = []
        os.makedirs(root, exist_ok=True)

    def write(self, relpath: str, data: bytes | str) -> str:
        path = os.path.join(self.root, relpath)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        payload = data.encode("utf-8") if isinstance(data, str) else data
        with open(path, "wb") as f:
            f.write(payload)
        self.artifacts.append(relpath.replace(os.sep, "/"))
        logger.debug("wrote %s (%d bytes)", path, len(payload))
        return path


def config_hash(source: str | bytes) -> str:
    data = source.encode("utf-8") if isinstance(source, str) else source
    return hashlib.sha256(data).hexdigest()


def manifest(kind: str, config_text: str | bytes, seeds: Sequence[int], formats: Sequence[str],
             artifacts: Sequence[str]) -> dict:
    return {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "kind": kind,
        "config_sha256": config_hash(config_text),
        "seeds": [int(s) for s in seeds],
        "formats": list(formats),
        "artifacts": sorted(set(artifacts) | {"manifest.json"}),
    }
