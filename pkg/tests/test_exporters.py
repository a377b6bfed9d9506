import hashlib
import json

import numpy as np
import pytest

from utils.exporters import (ArtifactWriter, FormatError, histogram_csv, load_spacetime, manifest,
                             metric_csv, pbm_bytes, ppm_bytes, read_snapshots_gz, render_spacetime,
                             run_fraction_csv, snapshots_gz, spacetime_from_bytes, spacetime_from_csv,
                             spacetime_to_bytes, spacetime_to_csv)
from utils.palettes import CATEGORICAL, GRAY


def pixels(ppm: bytes, width: int, height: int) -> np.ndarray:
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    assert ppm.startswith(header)
    return np.frombuffer(ppm[len(header):], dtype=np.uint8).reshape(height, width, 3)


# ---------------- Spacetime files ----------------

def test_csv_layout():
    m = np.array([[0, 3, -2], [1, 0, 0]])
    assert spacetime_to_csv(m) == "0,3,-2\n1,0,0\n"
    assert spacetime_from_csv("0,3,-2\n1,0,0\n").tolist() == m.tolist()


def test_csv_rejects_ragged_rows():
    with pytest.raises(FormatError):
        spacetime_from_csv("1,2\n3\n")


def test_symb1_header_and_body():
    m = np.array([[1, -1, 0, 7]])
    data = spacetime_to_bytes(m)
    assert data[:5] == b"SYMB1"
    assert int.from_bytes(data[5:9], "little") == 4
    assert int.from_bytes(data[9:13], "little") == 1
    assert data[13:17] == (1).to_bytes(4, "little", signed=True)
    assert data[17:21] == (-1).to_bytes(4, "little", signed=True)
    assert spacetime_from_bytes(data).tolist() == m.tolist()


def test_symb1_rejects_bad_input():
    with pytest.raises(FormatError):
        spacetime_from_bytes(b"NOPE!" + bytes(8))
    with pytest.raises(FormatError):
        spacetime_from_bytes(spacetime_to_bytes(np.ones((2, 2)))[:-1])
    with pytest.raises(FormatError):
        spacetime_to_bytes(np.array([[2**40]]))


def test_load_spacetime_sniffs_format(tmp_path):
    m = np.arange(-6, 6).reshape(3, 4)
    (tmp_path / "a.bin").write_bytes(spacetime_to_bytes(m))
    (tmp_path / "a.csv").write_text(spacetime_to_csv(m))
    assert load_spacetime(str(tmp_path / "a.bin")).tolist() == m.tolist()
    assert load_spacetime(str(tmp_path / "a.csv")).tolist() == m.tolist()


# ---------------- Images ----------------

def test_single_empty_cell_is_one_black_pixel():
    assert render_spacetime(np.zeros((1, 1), dtype=np.int64)) == b"P6\n1 1\n255\n\x00\x00\x00"


def test_positive_and_negative_use_different_channels():
    img = pixels(render_spacetime(np.array([[1, -1, 0]])), 3, 1)
    assert img[0, 0, 0] > 0 and img[0, 0, 2] == 0
    assert img[0, 1, 2] > 0 and img[0, 1, 0] == 0
    assert img[0, 2].tolist() == [0, 0, 0]


def test_generation_is_image_row():
    m = np.zeros((3, 2), dtype=np.int64)
    m[2, 1] = 5
    img = pixels(render_spacetime(m), 2, 3)
    assert img[2, 1, 0] == 255
    assert not img[:2].any()


def test_kmer_palette():
    ids = np.array([[-1, 0, 1, 2]])
    img = pixels(render_spacetime(ids, "kmer", legend=[2, 0]), 4, 1)
    assert img[0, 0].tolist() == [0, 0, 0]
    assert img[0, 3].tolist() == CATEGORICAL[0].tolist()
    assert img[0, 1].tolist() == CATEGORICAL[1].tolist()
    assert img[0, 2].tolist() == list(GRAY)


def test_bool_palette_marks_decay():
    cells = np.array([[1, 0, 0]])
    decay = np.array([[0, 1, 0]])
    img = pixels(render_spacetime(cells, "bool", decay=decay), 3, 1)
    assert img[0, 0].tolist() == [0, 0, 0]
    assert img[0, 1].tolist() == [220, 20, 20]
    assert img[0, 2].tolist() == [255, 255, 255]


def test_angle_palette_needs_vector_field():
    field = np.zeros((2, 3, 2), dtype=np.int64)
    field[0, 0] = (1, 0)
    img = pixels(render_spacetime(field, "angle"), 3, 2)
    assert img[0, 0].tolist() == [247, 247, 247]


def test_unknown_palette():
    with pytest.raises(FormatError):
        render_spacetime(np.ones((1, 1)), "rainbow")


def test_ppm_rejects_empty_image():
    with pytest.raises(FormatError):
        ppm_bytes(np.zeros((0, 3, 3)))


def test_pbm_pads_rows():
    data = pbm_bytes(np.array([[1, 0, 1], [0, 1, 0]]))
    assert data == b"P4\n3 2\n" + bytes([0b10100000, 0b01000000])


# ---------------- Tables ----------------

def test_metric_csv():
    text = metric_csv([("living_cells", 0, 3), ("entropy", 1, 0.5)])
    assert text == "metric,generation,value\nliving_cells,0,3\nentropy,1,0.5\n"


def test_histogram_csv_sorted_by_value():
    text = histogram_csv([{3: 2, -5: 1}])
    assert text.splitlines() == ["generation,value,count", "0,-5,1", "0,3,2"]


def test_run_fraction_csv_header():
    assert run_fraction_csv([(4, 0, 0.5, 0.1, 0.9)]).splitlines()[0] == "k,t,P,lower,upper"


def test_snapshots_are_reproducible():
    snaps = [[(0, "AC"), (1, "GT")], [(0, "ACG")]]
    data = snapshots_gz(snaps)
    assert data == snapshots_gz(snaps)
    assert read_snapshots_gz(data) == snaps


# ---------------- Run directory ----------------

def test_artifact_writer_tracks_files(tmp_path):
    writer = ArtifactWriter(str(tmp_path / "run"))
    writer.write("frames/frame_00000.ppm", b"x")
    writer.write("metrics.csv", "a\n")
    assert writer.artifacts == ["frames/frame_00000.ppm", "metrics.csv"]
    assert (tmp_path / "run" / "metrics.csv").read_text() == "a\n"


def test_manifest_fields():
    m = manifest("run1d", 'kind = "run1d"\n', [3, 1], ["csv", "ppm"], ["spacetime.csv", "metrics.csv"])
    assert m["tool"] == "symbion"
    assert m["config_sha256"] == hashlib.sha256(b'kind = "run1d"\n').hexdigest()
    assert m["seeds"] == [3, 1]
    assert m["artifacts"] == ["manifest.json", "metrics.csv", "spacetime.csv"]
    json.dumps(m)
