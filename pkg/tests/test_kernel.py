import itertools

import pytest
from hypothesis import given, settings, strategies as st

from orbifix.kernel import (
    FREE,
    CellValue,
    MatrixView,
    PartialMatrix,
    build_max_sequence,
    build_min_sequence,
    compute_fixing,
    compute_fixing_matrix,
    first_fixed_row,
    last_discriminating_row,
)
from orbifix.oracle import column_geq, enumerate_face, oracle_fixing


def test_cell_values_are_distinct():
    assert len({CellValue.ZERO, CellValue.ONE, CellValue.FREE}) == 3


def test_partial_matrix_round_trip():
    M = PartialMatrix.from_rows([[1, None], [0, 2]])
    assert M[0, 0] == 1 and M[0, 1] == FREE and M[1, 0] == 0
    assert M.zeros == {(1, 0)} and M.ones == {(0, 0)}
    assert M.copy() == M


def test_partial_matrix_rejects_conflicts():
    with pytest.raises(ValueError):
        PartialMatrix.from_sets(2, 2, zeros=[(0, 0)], ones=[(0, 0)])
    with pytest.raises(IndexError):
        PartialMatrix.from_sets(2, 2, zeros=[(2, 0)])
    with pytest.raises(ValueError):
        PartialMatrix(1, 2, [0, 3])


def test_view_rejects_duplicates():
    with pytest.raises(ValueError):
        MatrixView((0, 0), (1,))
    with pytest.raises(ValueError):
        MatrixView((0,), (1, 1))


class TestWorkedFace:
    def test_first_fixed_rows(self, worked_matrix):
        view = MatrixView.full(5, 3)
        assert first_fixed_row(worked_matrix, view, 0) == 3
        assert first_fixed_row(worked_matrix, view, 1) == 5

    def test_discriminating_rows(self, worked_matrix):
        view = MatrixView.full(5, 3)
        assert last_discriminating_row(worked_matrix, view, 0, 3) == 2
        assert last_discriminating_row(worked_matrix, view, 1, 5) == 3

    def test_min_and_max_sequences(self, worked_face):
        zeros, ones, view = worked_face
        assert build_min_sequence(zeros, ones, view) == (
            (1, 1, 1), (1, 1, 1), (1, 0, 0), (0, 1, 0), (1, 0, 0))
        assert build_max_sequence(zeros, ones, view) == (
            (1, 1, 1), (1, 1, 1), (1, 0, 0), (0, 1, 1), (1, 0, 0))

    def test_fixing_sets(self, worked_face):
        res = compute_fixing(*worked_face)
        assert res.feasible
        assert res.first_diff == (5, 5, 3)
        assert res.fix0 == {(2, 2)}
        assert res.fix1 == {(0, 0), (2, 0), (0, 1), (1, 1)}
        assert res.count == 5

    def test_matrix_entry_point_agrees(self, worked_face, worked_matrix):
        assert compute_fixing_matrix(worked_matrix, worked_face[2]) == compute_fixing(*worked_face)


def test_all_free_rows():
    M = PartialMatrix(3, 2)
    view = MatrixView.full(3, 2)
    assert first_fixed_row(M, view, 0) == 3
    assert last_discriminating_row(M, view, 0, 3) == 2


def test_column_position_out_of_range():
    M = PartialMatrix(2, 2)
    with pytest.raises(IndexError):
        first_fixed_row(M, MatrixView.full(2, 2), 1)


def test_all_free_sequences():
    view = MatrixView.full(3, 4)
    assert build_min_sequence(set(), set(), view) == ((0,) * 4,) * 3
    assert build_max_sequence(set(), set(), view) == ((1,) * 4,) * 3


def test_reversed_single_row_is_infeasible():
    view = MatrixView.full(1, 2)
    assert build_min_sequence({(0, 0)}, {(0, 1)}, view) is None
    assert build_max_sequence({(0, 0)}, {(0, 1)}, view) is None
    assert not compute_fixing({(0, 0)}, {(0, 1)}, view).feasible


def test_all_free_square_fixes_nothing():
    res = compute_fixing(set(), set(), MatrixView.full(2, 2))
    assert res.feasible and res.count == 0
    assert res.first_diff == (0, 0)


def test_one_in_second_column_forces_first():
    res = compute_fixing(set(), {(0, 1)}, MatrixView.full(2, 2))
    assert res.fix1 == {(0, 0)} and res.fix0 == set()


def test_empty_and_single_column_views():
    assert compute_fixing({(0, 0)}, set(), MatrixView((), (0, 1))).count == 0
    res = compute_fixing(set(), {(1, 0)}, MatrixView((0, 1), (0,)))
    assert res.feasible and res.count == 0


def test_overlapping_sets_rejected():
    with pytest.raises(ValueError):
        compute_fixing({(0, 0)}, {(0, 0)}, MatrixView.full(1, 1))


def test_view_subset_uses_global_coordinates():
    # rows 2 then 0, columns 3 and 1 of a larger matrix
    view = MatrixView((2, 0), (3, 1))
    res = compute_fixing(set(), {(2, 1)}, view)
    assert res.fix1 == {(2, 3)}


def test_cells_outside_view_are_ignored():
    view = MatrixView((0,), (0, 1))
    res = compute_fixing({(5, 5)}, {(0, 1), (7, 0)}, view)
    assert res.fix1 == {(0, 0)}


def test_row_order_changes_the_answer():
    # column 1 may only exceed column 0 in a row that is compared later
    zeros, ones = {(0, 0)}, {(1, 0), (0, 1)}
    assert not compute_fixing(zeros, ones, MatrixView((0, 1), (0, 1))).feasible
    assert compute_fixing(zeros, ones, MatrixView((1, 0), (0, 1))).feasible


def decision(res):
    return res.feasible, res.fix0, res.fix1


@st.composite
def faces(draw, max_rows=4, max_cols=4):
    m = draw(st.integers(1, max_rows))
    n = draw(st.integers(1, max_cols))
    codes = draw(st.lists(st.sampled_from([0, 1, 2, 2]), min_size=m * n, max_size=m * n))
    rows = draw(st.permutations(range(m)))
    cols = draw(st.permutations(range(n)))
    zeros = {divmod(k, n) for k, v in enumerate(codes) if v == 0}
    ones = {divmod(k, n) for k, v in enumerate(codes) if v == 1}
    return zeros, ones, MatrixView(tuple(rows), tuple(cols))


@settings(max_examples=300, deadline=None)
@given(faces())
def test_matches_enumeration(face):
    zeros, ones, view = face
    assert decision(compute_fixing(zeros, ones, view)) == decision(oracle_fixing(zeros, ones, view))


@settings(max_examples=300, deadline=None)
@given(faces())
def test_fixing_is_idempotent(face):
    zeros, ones, view = face
    res = compute_fixing(zeros, ones, view)
    if res.feasible:
        again = compute_fixing(zeros | res.fix0, ones | res.fix1, view)
        assert again.feasible and again.count == 0


@settings(max_examples=200, deadline=None)
@given(faces())
def test_extreme_matrices_sorted_and_bracket_every_completion(face):
    zeros, ones, view = face
    res = compute_fixing(zeros, ones, view)
    if not res.feasible:
        return
    n = len(view.col_order)
    lo_cols = [[row[c] for row in res.min_matrix] for c in range(n)]
    hi_cols = [[row[c] for row in res.max_matrix] for c in range(n)]
    for cols in (lo_cols, hi_cols):
        assert all(column_geq(cols[c], cols[c + 1]) for c in range(n - 1))
    for X in enumerate_face(zeros, ones, view).members:
        for c, gc in enumerate(view.col_order):
            col = [X[(r, gc)] for r in view.row_order]
            assert column_geq(col, lo_cols[c]) and column_geq(hi_cols[c], col)


@settings(max_examples=200, deadline=None)
@given(faces())
def test_fixings_disjoint_from_input(face):
    zeros, ones, view = face
    res = compute_fixing(zeros, ones, view)
    assert not (res.fix0 & res.fix1)
    assert not ((res.fix0 | res.fix1) & (zeros | ones))


def test_every_face_of_small_shapes():
    for m, n in [(1, 3), (2, 2), (3, 2), (2, 3)]:
        view = MatrixView.full(m, n)
        cells = list(view.cells())
        for codes in itertools.product(range(3), repeat=m * n):
            zeros = {c for c, v in zip(cells, codes) if v == 0}
            ones = {c for c, v in zip(cells, codes) if v == 1}
            got = decision(compute_fixing(zeros, ones, view))
            assert got == decision(oracle_fixing(zeros, ones, view))
