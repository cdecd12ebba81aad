import pytest

from orbifix.kernel import MatrixView, PartialMatrix

# 5x3 face used across kernel tests (0-based cells)
WORKED_ZEROS = {(3, 0), (2, 1), (4, 1)}
WORKED_ONES = {(1, 0), (4, 0), (3, 1), (0, 2), (1, 2)}


@pytest.fixture
def worked_face():
    return WORKED_ZEROS, WORKED_ONES, MatrixView.full(5, 3)


@pytest.fixture
def worked_matrix():
    return PartialMatrix.from_sets(5, 3, WORKED_ZEROS, WORKED_ONES)
