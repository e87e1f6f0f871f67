from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, strategies as st

from scottrank.errors import ParseError, PreconditionError, ValidationError
from scottrank.fixtures import SPACE_LINE, SPACE_PATH3, SPACE_SQUARE
from scottrank.metric import (MetricSpace, NetFamily, build_net_family, format_rational, from_coordinates,
                              is_nested_cover, min_distance_gap, parse_metric_space, parse_rational,
                              product_distance, validate_metric)
from scottrank.corpus import small_metric_spaces


def test_rationals_normalised():
    assert parse_rational("6/4") == Fraction(3, 2)
    assert format_rational(Fraction(6, 4)) == "3/2"
    assert format_rational(Fraction(4, 2)) == "2"
    for bad in ("1.5", "x", "1/0", ""):
        with pytest.raises(ParseError):
            parse_rational(bad)


def test_fixtures_are_valid():
    assert SPACE_PATH3.labels == ("A", "B", "C")
    assert SPACE_PATH3.d(0, 2) == 2
    for s in (SPACE_PATH3, SPACE_SQUARE, SPACE_LINE):
        assert validate_metric(s) == []


def test_symmetry_error_names_indices():
    with pytest.raises(ValidationError) as exc:
        MetricSpace.from_matrix([[0, 1], [2, 0]])
    assert exc.value.violation.axiom == "symmetry"
    assert exc.value.violation.indices == (0, 1)


def test_positivity_and_triangle_reports():
    bad = MetricSpace.from_matrix([[0, 1, 0], [1, 0, 1], [0, 1, 0]], validate=False)
    assert ("positivity", (0, 2)) in [(v.axiom, v.indices) for v in validate_metric(bad)]
    tri = MetricSpace.from_matrix([[0, 1, 5], [1, 0, 1], [5, 1, 0]], validate=False)
    assert [(v.axiom, v.indices) for v in validate_metric(tri)] == [("triangle", (0, 1, 2))]


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_metric_space("{not json")
    with pytest.raises(ParseError):
        parse_metric_space({"labels": ["a"]})
    with pytest.raises(ParseError):
        parse_metric_space({"dist": [["0", "1"]]})


@pytest.mark.parametrize("space", [SPACE_PATH3, SPACE_SQUARE, SPACE_LINE])
def test_round_trip(space):
    assert parse_metric_space(space.dumps()) == space


def test_product_distance():
    assert product_distance(SPACE_PATH3, (0, 1), (0, 1)) == 0
    assert product_distance(SPACE_PATH3, (0, 1), (1, 2)) == 2
    assert product_distance(SPACE_LINE, (0, 1), (2, 3)) == 9
    with pytest.raises(PreconditionError):
        product_distance(SPACE_LINE, (0,), (1, 2))


def test_product_distance_is_a_metric():
    for space in small_metric_spaces(4)[::5]:
        tuples = list(product(range(space.n), repeat=2))
        for s in tuples:
            for t in tuples:
                dst = product_distance(space, s, t)
                assert dst == product_distance(space, t, s)
                assert (dst == 0) == (s == t)
                for u in tuples[::3]:
                    assert dst <= product_distance(space, s, u) + product_distance(space, u, t)


def test_min_distance_gap():
    assert min_distance_gap(SPACE_PATH3) == (1, 1)
    assert min_distance_gap(SPACE_SQUARE) == (1, 1)
    assert min_distance_gap(SPACE_LINE) == (1, 1)
    half = MetricSpace.from_matrix([[0, "1/2"], ["1/2", 0]])
    assert min_distance_gap(half) == (Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(PreconditionError):
        min_distance_gap(MetricSpace.from_matrix([[0]]))


def test_nets():
    single = build_net_family(MetricSpace.from_matrix([[0]]), 4)
    assert single.net(0) == (0,) and single.net(7) == (0,) and single.terminal_depth == 0
    p3 = build_net_family(SPACE_PATH3, 3)
    assert p3.net(1) == (0, 1, 2)
    line = build_net_family(SPACE_LINE, 5)
    assert all(line.net(n) == (0, 1, 2, 3) for n in range(6))
    assert NetFamily.from_json(line.to_json(), 4) == line


def test_coarse_nets_grow():
    far = from_coordinates([[0], ["1/8"], ["3/8"], [1]])
    nets = build_net_family(far, 10)
    assert nets.net(0) == (0, 3)  # d = 1 is not < 1
    assert nets.terminal_depth > 0
    assert is_nested_cover(far, nets)


@given(st.lists(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=6, unique=True),
       st.sampled_from(["l1", "linf"]), st.integers(1, 8))
def test_nets_nested_and_covering(points, norm, den):
    space = from_coordinates([[Fraction(x, den), Fraction(y, den)] for x, y in points], norm)
    assert validate_metric(space) == []
    assert is_nested_cover(space, build_net_family(space, 6))
