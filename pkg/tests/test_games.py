import json
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

import pytest
from hypothesis import given, strategies as st

from scottrank.analysis import distinguishing_strategy, scott_rank_pair
from scottrank.corpus import random_rational_spaces, small_metric_spaces
from scottrank.errors import IllegalMoveError, ParseError, PreconditionError, StrategyError
from scottrank.fixtures import SPACE_LINE, SPACE_PATH3, SPACE_SQUARE
from scottrank.games import (DEFAULT_FAMILY, LEFT, OMEGA_BUDGET, RIGHT, ApproxSolver, EFSolver, Geometric, Move,
                             Strategy, approx_related, check_strategy, metric_rank_upper, replay_game,
                             solve_approx_game, solve_ef_game)
from scottrank.ranks import INFINITY, Finite

A, B, C = 0, 1, 2
F1 = Geometric(Fraction(1, 4), Fraction(1, 2))


# --------------------------------------------------------------------------
# schedules and moves


def test_geometric():
    f = Geometric.parse("geometric:1/4,1/2")
    assert f == F1 and f(0) == Fraction(1, 4) and f(3) == Fraction(1, 32)
    assert Geometric.from_json(f.to_json()) == f
    for bad in ("geometric:0,1/2", "geometric:1,1", "geometric:1", "linear:1,1/2"):
        with pytest.raises((ParseError, PreconditionError)):
            Geometric.parse(bad)


def test_move_json():
    m = Move(2, RIGHT, 3)
    assert Move.from_json(m.to_json()) == m


# --------------------------------------------------------------------------
# EF game


def test_ef_base_case_is_atomic():
    for space in small_metric_spaces(4)[::6]:
        for a in permutations(range(space.n), 2):
            for b in permutations(range(space.n), 2):
                atomic = space.d(*a) == space.d(*b)
                assert (solve_ef_game(space, a, b, 0).winner == 2) == atomic


def test_ef_path3():
    out = solve_ef_game(SPACE_PATH3, (A,), (B,), 1)
    assert out.winner == 1
    assert out.strategy.policy.move(out.strategy.initial_state()) == Move(0, LEFT, C)
    omega = solve_ef_game(SPACE_PATH3, (A,), (C,), "omega")
    assert omega.winner == 2 and omega.strategy.to_json()["mirror"] == [2, 1, 0]
    assert check_strategy(omega).ok


def test_ef_length_mismatch():
    with pytest.raises(PreconditionError):
        solve_ef_game(SPACE_PATH3, (A,), (), 1)


def test_budget_monotone():
    for space in small_metric_spaces(5)[::40]:
        ef = EFSolver(space)
        approx = {f: ApproxSolver(space, f) for f in DEFAULT_FAMILY}
        for a in permutations(range(space.n), 1):
            for b in permutations(range(space.n), 1):
                for n in range(4):
                    if solve_ef_game(space, a, b, n + 1, solver=ef).winner == 2:
                        assert solve_ef_game(space, a, b, n, solver=ef).winner == 2
                    for f, sol in approx.items():
                        if approx_related(space, a, b, n + 1, f, solver=sol):
                            assert approx_related(space, a, b, n, f, solver=sol)


# --------------------------------------------------------------------------
# approximation game: reference evaluator with no clamps, no mirrors


def naive_approx_wins(space, a, b, budget, f):
    D = space.dist
    pts = range(space.n)

    def holds(c, d):
        for j in range(len(c)):
            if any(not abs(D[a[i]][c[j]] - D[b[i]][d[j]]) < f(j) for i in range(len(a))):
                return False
            if any(not abs(D[c[i]][c[j]] - D[d[i]][d[j]]) < f(i) + f(j) for i in range(len(c))):
                return False
        return True

    @lru_cache(maxsize=None)
    def wins(c, d, r):
        if r == 0:
            return holds(c, d)
        left = len(c) % 2 == 0
        for beta in range(r):
            for x in pts:
                if not any(wins(c + ((x,) if left else (y,)), d + ((y,) if left else (x,)), beta)
                           for y in pts):
                    return False
        return True

    return wins((), (), budget)


SCHEDULES = [F1, Geometric(Fraction(1, 16), Fraction(1, 2)), Geometric(Fraction(3, 2), Fraction(1, 2)),
             Geometric(Fraction(1), Fraction(1, 3)), Geometric(Fraction(4), Fraction(1, 2))]


@pytest.mark.parametrize("f", SCHEDULES, ids=str)
def test_approx_solver_matches_reference(f):
    spaces = small_metric_spaces(4)[::3] + [s for s in random_rational_spaces(30, seed=7, max_points=4)][::3]
    for space in spaces:
        fast = ApproxSolver(space, f)
        plain = ApproxSolver(space, f)
        plain.use_mirrors = False
        for a in permutations(range(space.n), 1):
            for b in permutations(range(space.n), 1):
                for n in range(4):
                    want = naive_approx_wins(space, a, b, n, f)
                    assert approx_related(space, a, b, n, f, solver=fast) == want, (space, a, b, n)
                    assert approx_related(space, a, b, n, f, solver=plain) == want, (space, a, b, n)


def test_approx_path3():
    out = solve_approx_game(SPACE_PATH3, (A,), (B,), 1, F1)
    assert out.winner == 1
    assert out.strategy.policy.move(out.strategy.initial_state()) == Move(0, LEFT, C)
    assert solve_approx_game(SPACE_PATH3, (A,), (B,), 1, Geometric(4, Fraction(1, 2))).winner == 2
    assert all(approx_related(SPACE_LINE, (x,), (y,), 0, F1) for x in range(4) for y in range(4))
    assert approx_related(SPACE_SQUARE, (0, 1), (0, 1), "omega", F1)


def test_metric_rank_upper():
    assert metric_rank_upper(SPACE_PATH3, (A,), (A,)) == INFINITY
    assert metric_rank_upper(SPACE_PATH3, (A,), (B,), [F1]) == Finite(1)
    assert metric_rank_upper(SPACE_PATH3, (A,), (C,), [Geometric(Fraction(1, 1000), Fraction(1, 7))]) == INFINITY
    with pytest.raises(PreconditionError):
        metric_rank_upper(SPACE_PATH3, (A,), (B,), [])


def test_tolerance_monotone():
    loose = Geometric(Fraction(1, 2), Fraction(1, 2))
    for space in small_metric_spaces(4)[::5]:
        for a in permutations(range(space.n), 1):
            for b in permutations(range(space.n), 1):
                for n in range(3):
                    if approx_related(space, a, b, n, F1):
                        assert approx_related(space, a, b, n, loose)


def test_sr_below_upper_bound_on_rationals():
    for space in random_rational_spaces(12, seed=3, max_points=4):
        for a in permutations(range(space.n), 1):
            for b in permutations(range(space.n), 1):
                assert scott_rank_pair(space, a, b) <= metric_rank_upper(space, a, b)


# --------------------------------------------------------------------------
# replay and exhaustive checking


def test_replay_scripts():
    strat = distinguishing_strategy(SPACE_PATH3, (A,), (B,))
    for y in range(3):
        assert replay_game(strat, [y]).winner == 1
    zero = solve_ef_game(SPACE_PATH3, (A,), (A,), 0)
    assert replay_game(zero, []).winner == 2
    p2 = solve_ef_game(SPACE_PATH3, (A,), (C,), 2)
    verdict = replay_game(p2, [Move(1, LEFT, B).to_json(), Move(0, RIGHT, A).to_json()])
    assert verdict.winner == 2 and len(verdict.transcript) == 2
    with pytest.raises(IllegalMoveError) as exc:
        replay_game(p2, [Move(2, LEFT, B)])
    assert exc.value.index == 0
    with pytest.raises(IllegalMoveError):
        replay_game(strat, [])
    with pytest.raises(IllegalMoveError):
        replay_game(strat, [0, 1])
    approx = solve_approx_game(SPACE_PATH3, (A,), (C,), 2, F1)
    with pytest.raises(IllegalMoveError):
        replay_game(approx, [Move(1, RIGHT, B), Move(0, LEFT, A)])


def _corrupt_first_reply(doc, space):
    """Point the first stored reply at a point that loses."""
    for child in doc["tree"]["children"]:
        node = child["node"]
        good = node["move"]
        for bad in range(space.n):
            if bad != good:
                node["move"] = bad
                return doc
    raise AssertionError


def test_certificate_round_trip_and_negative_control():
    out = solve_ef_game(SPACE_PATH3, (A,), (C,), 2)
    doc = json.loads(json.dumps(out.strategy.to_json()))
    again = Strategy.from_json(doc, SPACE_PATH3)
    assert check_strategy(again).ok
    broken = Strategy.from_json(_corrupt_first_reply(doc, SPACE_PATH3), SPACE_PATH3)
    report = check_strategy(broken)
    assert not report.ok and report.failures

    p1 = distinguishing_strategy(SPACE_PATH3, (A,), (B,)).to_json()
    p1["tree"]["move"] = Move(0, LEFT, B).to_json()  # B is matched by A: no longer a win
    assert not check_strategy(Strategy.from_json(p1, SPACE_PATH3)).ok


def test_missing_branch_is_reported():
    doc = solve_ef_game(SPACE_PATH3, (A,), (C,), 1).strategy.to_json()
    doc["tree"]["children"] = doc["tree"]["children"][:-1]
    with pytest.raises(StrategyError):
        check_strategy(Strategy.from_json(doc, SPACE_PATH3))


def test_omega_approx_strategy_checked():
    out = solve_approx_game(SPACE_SQUARE, (0,), (2,), "omega", F1)
    assert out.winner == 2 and out.strategy.budget == OMEGA_BUDGET
    assert check_strategy(out).ok


@given(st.sampled_from(small_metric_spaces(4)), st.integers(0, 3), st.data())
def test_every_outcome_survives_opposition(space, n, data):
    a = data.draw(st.tuples(*[st.integers(0, space.n - 1)] * 1))
    b = data.draw(st.tuples(*[st.integers(0, space.n - 1)] * 1))
    assert check_strategy(solve_ef_game(space, a, b, n)).ok
    f = data.draw(st.sampled_from(SCHEDULES))
    assert check_strategy(solve_approx_game(space, a, b, n, f)).ok
