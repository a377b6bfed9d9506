import numpy as np
import pytest

from engines.norms import (Collider, CollisionContext, NormId, NormMapError, arrival_sides,
                           make_norm_map, parse_patch, resolve_collision)


def ctx(prev, target=8, u=2, v=3, boundary="periodic"):
    row = np.zeros(16, dtype=np.int64) if prev is None else np.asarray(prev, dtype=np.int64)
    colliders = (Collider(7, target - v, v), Collider(-5, target + u, -u))
    return CollisionContext(target, colliders, row, boundary, u, v)


def row_with(values, length=16):
    row = np.zeros(length, dtype=np.int64)
    for pos, val in values.items():
        row[pos] = val
    return row


@pytest.mark.parametrize("norm", list(NormId))
def test_parse_accepts_lowercase_names(norm):
    assert NormId.parse(norm.value.upper()) is norm


def test_parse_rejects_unknown_norm_naming_valid_set():
    with pytest.raises(ValueError, match="zero\\|a\\|b\\|c\\|d"):
        NormId.parse("q")


def test_zero_always_empties():
    assert resolve_collision(NormId.ZERO, ctx(row_with({10: -2, 5: 3}))) == 0
    assert resolve_collision(NormId.ZERO, ctx(row_with({8: 4, 10: 2, 5: 3}))) == 0


def test_a_opposite_signs_gives_negative_sum():
    assert resolve_collision(NormId.A, ctx(row_with({10: -2, 5: 3}))) == -5


def test_a_same_signs_gives_positive_sum():
    assert resolve_collision(NormId.A, ctx(row_with({10: 2, 5: 3}))) == 5


def test_a_empty_neighbour_counts_as_disagreement():
    assert resolve_collision(NormId.A, ctx(row_with({5: 3}))) == -5


def test_b_same_signs():
    assert resolve_collision(NormId.B, ctx(row_with({10: 2, 5: 3}))) == 4


def test_b_opposite_signs():
    assert resolve_collision(NormId.B, ctx(row_with({10: -2, 5: 3}))) == -4


@pytest.mark.parametrize("norm", [NormId.A, NormId.B, NormId.C])
def test_occupied_cell_kills(norm):
    assert resolve_collision(norm, ctx(row_with({8: 1, 10: 2, 5: 3}))) == 0


def test_a_and_b_differ_by_one_in_magnitude():
    for prev in ({10: 2, 5: 3}, {10: -2, 5: 3}, {10: -1, 5: -6}):
        a = resolve_collision(NormId.A, ctx(row_with(prev)))
        b = resolve_collision(NormId.B, ctx(row_with(prev)))
        assert abs(a) - abs(b) == 1
        assert np.sign(a) == np.sign(b)


def test_c_takes_left_minus_right():
    assert resolve_collision(NormId.C, ctx(row_with({5: 3, 10: -2}))) == 5


def test_c_difference_of_equal_values_dies():
    assert resolve_collision(NormId.C, ctx(row_with({5: 3, 10: 3}))) == 0


def test_d_equal_neighbours():
    assert resolve_collision(NormId.D, ctx(row_with({8: 2, 10: 3, 6: 3}))) == 4


def test_d_unequal_neighbours():
    assert resolve_collision(NormId.D, ctx(row_with({8: 2, 10: 3, 6: 1}))) == 0


def test_d_on_empty_previous_cell():
    # s = 0 reads the cell itself on both sides: -0 + 2 * 0
    assert resolve_collision(NormId.D, ctx(row_with({10: 3}))) == 0


def test_value_too_large_for_grid_dies():
    row = row_with({11: 2, 5: 3}, length=6 + 6)
    c = CollisionContext(8, (), row, "periodic", 3, 3)
    assert resolve_collision(NormId.A, c) == 6
    small = CollisionContext(2, (), np.array([0, 0, 0, 2, 0, 0]), "periodic", 3, 3)
    assert resolve_collision(NormId.A, small) == 0


def test_bounded_lookup_outside_reads_empty():
    row = row_with({4: -2}, length=8)
    c = CollisionContext(1, (), row, "bounded", 3, 3)
    assert c.lookup(-3) == 0
    assert resolve_collision(NormId.C, c) == 2


def test_periodic_lookup_wraps():
    row = row_with({14: 3, 3: -2})
    c = CollisionContext(1, (), row, "periodic", 2, 3)
    assert c.lookup(-3) == 3
    assert resolve_collision(NormId.C, c) == 5


def test_resolution_is_pure():
    c = ctx(row_with({10: -2, 5: 3}))
    assert resolve_collision(NormId.A, c) == resolve_collision(NormId.A, c)


def test_arrival_sides_left_and_right():
    left = Collider(3, 5, 3)
    right = Collider(-2, 10, -2)
    assert arrival_sides(left, right) == (2, 3)


def test_arrival_sides_both_from_left():
    far = Collider(5, 3, 5)
    near = Collider(2, 6, 2)
    assert arrival_sides(far, near) == (2, 5)


def test_norm_map_uniform():
    assert make_norm_map(4, [(0, 4, NormId.ZERO)]) == (NormId.ZERO,) * 4


def test_norm_map_halves_are_half_open():
    m = make_norm_map(8, [(0, 4, NormId.A), (4, 8, NormId.C)])
    assert m[3] is NormId.A
    assert m[4] is NormId.C


def test_norm_map_rejects_overlap():
    with pytest.raises(NormMapError, match="overlap"):
        make_norm_map(8, [(0, 5, NormId.A), (4, 8, NormId.C)])


def test_norm_map_rejects_gap():
    with pytest.raises(NormMapError, match="uncovered"):
        make_norm_map(8, [(0, 3, NormId.A), (4, 8, NormId.C)])


def test_parse_patch():
    assert parse_patch("128:256:c") == (128, 256, NormId.C)
    with pytest.raises(NormMapError):
        parse_patch("0:128")
