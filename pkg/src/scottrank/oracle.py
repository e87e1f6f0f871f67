"""Brute-force reference implementations.

Nothing here imports the analysis, game or systems modules, and the
distance comparisons are written out again on the raw Fraction matrix, so
agreement between these functions and the main algorithms means something.
"""

from __future__ import annotations

from itertools import permutations
from math import gcd
from typing import Sequence

from .errors import OracleCapError, PreconditionError
from .metric import MetricSpace
from .ranks import INFINITY, Finite, RankValue

DEFAULT_CAP = 8

# Hard limits for brute_scott_rank_pair.
MAX_POINTS = 5
MAX_TUPLE = 3
MAX_BUDGET = 5


def _preserves(dist, perm) -> bool:
    n = len(perm)
    for i in range(n):
        row = dist[i]
        prow = dist[perm[i]]
        for j in range(i + 1, n):
            if row[j] != prow[perm[j]]:
                return False
    return True


def enumerate_autoisometries(space: MetricSpace, cap: int = DEFAULT_CAP) -> list[tuple]:
    """All distance-preserving permutations, in lexicographic order."""
    if space.n > cap:
        raise OracleCapError(f"{space.n} points exceeds the oracle cap of {cap}")
    return [p for p in permutations(range(space.n)) if _preserves(space.dist, p)]


def exists_autoisometry_mapping(space: MetricSpace, a: Sequence[int], b: Sequence[int],
                                cap: int = DEFAULT_CAP) -> bool:
    if len(a) != len(b):
        raise PreconditionError(f"tuple lengths differ: {len(a)} vs {len(b)}")
    return any(all(p[x] == y for x, y in zip(a, b))
               for p in enumerate_autoisometries(space, cap))


class _NaiveGame:
    """Direct recursion on the back-and-forth clauses over tuples with repeats."""

    def __init__(self, space: MetricSpace):
        den = 1
        for row in space.dist:
            for q in row:
                den = den * q.denominator // gcd(den, q.denominator)
        self.dist = [[int(q * den) for q in row] for row in space.dist]
        self.points = range(space.n)
        self.seen: dict = {}

    def atomic(self, a, b) -> bool:
        dist = self.dist
        for i in range(len(a)):
            ra, rb = dist[a[i]], dist[b[i]]
            for j in range(i + 1, len(a)):
                if ra[a[j]] != rb[b[j]]:
                    return False
        return True

    def related(self, a, b, n) -> bool:
        key = (a, b, n)
        hit = self.seen.get(key)
        if hit is None:
            hit = self.seen[key] = self.atomic(a, b) and self._extendable(a, b, n)
        return hit

    def _extendable(self, a, b, n) -> bool:
        if n == 0:
            return True
        dist = self.dist
        cols_a = [dist[x] for x in a]
        cols_b = [dist[y] for y in b]
        pts = self.points
        ok = {}
        for x in pts:
            for y in pts:
                if all(ra[x] == rb[y] for ra, rb in zip(cols_a, cols_b)):
                    ok.setdefault(x, []).append(y)
        # forth: every x has a partner y
        for x in pts:
            if not any(self.related(a + (x,), b + (y,), n - 1) for y in ok.get(x, ())):
                return False
        # back: every y has a partner x
        for y in pts:
            if not any(self.related(a + (x,), b + (y,), n - 1)
                       for x in pts if y in ok.get(x, ())):
                return False
        return True


class BruteRanker:
    """Reuses one recursion table across many pairs of the same space."""

    def __init__(self, space: MetricSpace):
        self.space = space
        self.game = _NaiveGame(space)

    def rank(self, a, b, budget_cap: int = MAX_BUDGET) -> RankValue:
        return brute_scott_rank_pair(self.space, a, b, budget_cap, _game=self.game)


def brute_scott_rank_pair(space: MetricSpace, a: Sequence[int], b: Sequence[int],
                          budget_cap: int = MAX_BUDGET, _game=None) -> RankValue:
    """Least level at which the pair stops being related, or infinity.

    Infinity is only returned with a witness: if the pair is related at
    level ``|M| - k`` (``k`` distinct entries in ``a``), Player 1 can name
    every remaining point in turn and the surviving responses form a total
    distance-preserving map, i.e. an autoisometry carrying ``a`` to ``b``.
    """
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise PreconditionError(f"tuple lengths differ: {len(a)} vs {len(b)}")
    if space.n > MAX_POINTS:
        raise OracleCapError(f"{space.n} points exceeds the oracle limit of {MAX_POINTS}")
    if len(a) > MAX_TUPLE:
        raise OracleCapError(f"tuple length {len(a)} exceeds the oracle limit of {MAX_TUPLE}")
    if budget_cap > MAX_BUDGET:
        raise OracleCapError(f"budget {budget_cap} exceeds the oracle limit of {MAX_BUDGET}")
    horizon = space.n - len(set(a))
    if horizon > budget_cap:
        raise OracleCapError(f"witness level {horizon} exceeds budget cap {budget_cap}")
    game = _game or _NaiveGame(space)
    if game.related(a, b, horizon):
        return INFINITY
    for n in range(horizon):
        if not game.related(a, b, n):
            return Finite(n)
    return Finite(horizon)
