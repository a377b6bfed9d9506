import itertools

import numpy as np
import pytest

from engines.gated_engine import BoolWorld, GateConfig, GateError, gate_open, run_gated, step_gated
from oracles import eca_oracle


@pytest.mark.parametrize("length", [5, 6, 7, 8, 9, 10])
def test_open_gate_reduces_to_rule_110(length):
    cfg = GateConfig(rule=110, threshold=0)
    for bits in itertools.product((0, 1), repeat=length):
        spacetime, decay = run_gated(BoolWorld(np.array(bits)), cfg, 16)
        assert spacetime.tolist() == eca_oracle(list(bits), 110, 16), bits
        assert not decay.any()


@pytest.mark.slow
@pytest.mark.parametrize("length", [11, 12])
def test_open_gate_reduces_to_rule_110_larger(length):
    cfg = GateConfig(rule=110, threshold=0)
    for bits in itertools.product((0, 1), repeat=length):
        spacetime, _ = run_gated(BoolWorld(np.array(bits)), cfg, 16)
        assert spacetime.tolist() == eca_oracle(list(bits), 110, 16)


@pytest.mark.parametrize("rule", [30, 90, 184])
def test_open_gate_matches_other_rules(rule):
    rng = np.random.default_rng(rule)
    cells = (rng.random(24) < 0.5).astype(int).tolist()
    spacetime, _ = run_gated(BoolWorld(np.array(cells)), GateConfig(rule=rule, threshold=0), 20)
    assert spacetime.tolist() == eca_oracle(cells, rule, 20)


def test_rule_table_bit_order():
    table = GateConfig(rule=110).table
    # 110 = 0b01101110, neighbourhood 111 -> 0, 110 -> 1, 000 -> 0
    assert table.tolist() == [0, 1, 1, 1, 0, 1, 1, 0]


def test_lonely_cell_decays():
    cells = np.zeros(12, dtype=np.uint8)
    cells[5] = 1
    nxt, decay = step_gated(BoolWorld(cells), GateConfig(threshold=2))
    assert not nxt.cells.any()
    assert np.flatnonzero(decay).tolist() == [5]


def test_gate_counts_five_cell_window():
    cells = np.array([1, 1, 0, 0, 0, 0, 0, 0], dtype=np.int64)
    assert np.flatnonzero(gate_open(cells, 2)).tolist() == [0, 1, 2, 7]


def test_decay_log_marks_row_it_produced():
    cells = np.zeros(10, dtype=np.uint8)
    cells[3] = 1
    spacetime, decay = run_gated(BoolWorld(cells), GateConfig(threshold=2), 3)
    assert not decay[0].any()
    assert decay[1, 3] == 1
    assert not spacetime[1].any()
    assert not decay[2].any()


def test_full_threshold_only_fires_in_solid_blocks():
    cells = np.ones(8, dtype=np.uint8)
    nxt, decay = step_gated(BoolWorld(cells), GateConfig(threshold=5))
    # rule 110 maps 111 to 0: gate open everywhere but the rule clears every cell
    assert not nxt.cells.any()
    assert not decay.any()


@pytest.mark.parametrize("kwargs", [{"rule": 256}, {"threshold": 6}, {"threshold": -1}, {"radius": 3}])
def test_config_validation(kwargs):
    with pytest.raises(GateError):
        GateConfig(**kwargs)


def test_world_needs_five_cells():
    with pytest.raises(GateError):
        BoolWorld(np.ones(4))


def test_random_world_is_seeded():
    a = BoolWorld.random(64, 0.5, rng_seed=3)
    b = BoolWorld.random(64, 0.5, rng_seed=3)
    assert np.array_equal(a.cells, b.cells)


@pytest.mark.slow
def test_threshold_two_keeps_random_start_active():
    world = BoolWorld.random(256, 0.5, rng_seed=1)
    spacetime, decay = run_gated(world, GateConfig(threshold=2), 512)
    assert spacetime[-1].any()
    assert decay.sum() > 0
