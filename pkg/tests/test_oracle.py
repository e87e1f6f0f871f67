import pytest

from scottrank.errors import OracleCapError, PreconditionError
from scottrank.fixtures import SPACE_LINE, SPACE_PATH3, SPACE_SQUARE
from scottrank.metric import MetricSpace
from scottrank.oracle import brute_scott_rank_pair, enumerate_autoisometries, exists_autoisometry_mapping
from scottrank.ranks import INFINITY, Finite


def test_autoisometry_counts():
    assert enumerate_autoisometries(SPACE_PATH3) == [(0, 1, 2), (2, 1, 0)]
    assert len(enumerate_autoisometries(SPACE_SQUARE)) == 8
    assert enumerate_autoisometries(SPACE_LINE) == [(0, 1, 2, 3)]


def test_mapping_queries():
    assert exists_autoisometry_mapping(SPACE_PATH3, (0, 1), (0, 1))
    assert not exists_autoisometry_mapping(SPACE_PATH3, (0,), (1,))
    assert not any(exists_autoisometry_mapping(SPACE_LINE, (x,), (y,))
                   for x in range(4) for y in range(4) if x != y)
    with pytest.raises(PreconditionError):
        exists_autoisometry_mapping(SPACE_PATH3, (0,), ())


def test_brute_ranks():
    assert brute_scott_rank_pair(SPACE_PATH3, (0,), (0,)) == INFINITY
    assert brute_scott_rank_pair(SPACE_PATH3, (0,), (1,)) == Finite(1)
    assert brute_scott_rank_pair(SPACE_PATH3, (0,), (2,)) == INFINITY


def test_caps_are_errors():
    big = MetricSpace.from_matrix([[0 if i == j else 1 for j in range(9)] for i in range(9)])
    with pytest.raises(OracleCapError):
        enumerate_autoisometries(big)
    six = MetricSpace.from_matrix([[0 if i == j else 1 for j in range(6)] for i in range(6)])
    with pytest.raises(OracleCapError):
        brute_scott_rank_pair(six, (0,), (1,))
    with pytest.raises(OracleCapError):
        brute_scott_rank_pair(SPACE_LINE, (0, 1, 2, 3), (0, 1, 2, 3))
    with pytest.raises(OracleCapError):
        brute_scott_rank_pair(SPACE_LINE, (0,), (1,), budget_cap=2)
