"""Back-and-forth relations, Scott ranks, and distinguishing strategies.

The relation at each level is an equivalence on same-length tuples, so it
is stored as a colouring: two tuples are related at level ``n`` iff they
carry the same level-``n`` colour.  The successor step then reads

    colour[n+1](t) = (colour[n](t), {colour[n](t + x) : x not in t})

because "every one-point extension on one side is matched on the other"
between two equivalence classes is exactly equality of the sets of
extension colours.  Extensions by a point already in the tuple are matched
by the corresponding point on the other side and collapse back to the
tuple itself, so only tuples of distinct points are tracked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Iterator, Sequence

from .errors import PreconditionError
from .metric import MetricSpace
from .ranks import INFINITY, Finite, RankValue


def atomic_related(space: MetricSpace, a: Sequence[int], b: Sequence[int]) -> bool:
    """True iff ``a_i -> b_i`` preserves every pairwise distance exactly."""
    if len(a) != len(b):
        raise PreconditionError(f"tuple lengths differ: {len(a)} vs {len(b)}")
    d = space.idist
    p = len(a)
    return all(d[a[i]][a[j]] == d[b[i]][b[j]] for i in range(p) for j in range(i + 1, p))


def collapse(a: Sequence[int], b: Sequence[int]):
    """Drop repeated positions from a pair of tuples.

    Returns ``None`` when the repetition patterns differ (the pair then fails
    already at the atomic level), otherwise the pair restricted to the first
    occurrence of each point.
    """
    ka: dict = {}
    kb: dict = {}
    out_a, out_b = [], []
    for x, y in zip(a, b):
        if x in ka or y in kb:
            if ka.get(x) != y or kb.get(y) != x:
                return None
            continue
        ka[x] = y
        kb[y] = x
        out_a.append(x)
        out_b.append(y)
    return tuple(out_a), tuple(out_b)


@dataclass
class BackAndForthTable:
    space: MetricSpace
    p_max: int
    tuples: list  # tuples[p] = all distinct-point tuples of length p, lexicographic
    index: list  # index[p][t] = position of t in tuples[p]
    colours: list  # colours[n][p][i] = level-n colour of tuples[p][i]
    stabilization_level: int
    _ranks: dict = field(default_factory=dict, repr=False)

    def _rank_distinct(self, a: tuple, b: tuple) -> RankValue:
        key = (a, b) if a <= b else (b, a)
        hit = self._ranks.get(key)
        if hit is not None:
            return hit
        p = len(a)
        ia, ib = self.index[p][a], self.index[p][b]
        result = INFINITY
        for n, level in enumerate(self.colours):
            if level[p][ia] != level[p][ib]:
                result = Finite(n)
                break
        self._ranks[key] = result
        return result

    def rank(self, a: Sequence[int], b: Sequence[int]) -> RankValue:
        if len(a) != len(b):
            raise PreconditionError(f"tuple lengths differ: {len(a)} vs {len(b)}")
        for x in (*a, *b):
            self.space.index(x)
        pair = collapse(a, b)
        if pair is None:
            return Finite(0)
        return self._rank_distinct(*pair)

    def related(self, a: Sequence[int], b: Sequence[int], n: int) -> bool:
        r = self.rank(a, b)
        return not r.is_finite or r.value > n

    def pairs(self, p: int) -> Iterator[tuple]:
        """Every ordered pair of distinct-point ``p``-tuples with its rank."""
        if p >= len(self.tuples):
            return  # no distinct-point tuple that long
        for a in self.tuples[p]:
            for b in self.tuples[p]:
                yield a, b, self._rank_distinct(a, b)

    def to_json(self, p: int | None = None) -> dict | list:
        lengths = range(1, self.p_max + 1) if p is None else [p]
        out = []
        for q in lengths:
            out.append({
                "p": q,
                "pairs": [{"a": list(a), "b": list(b), "rank": str(r)} for a, b, r in self.pairs(q)],
                "stabilization": self.stabilization_level,
            })
        return out[0] if p is not None else out


def _distinct_tuples(n: int) -> list:
    return [list(permutations(range(n), p)) for p in range(n + 1)]


def compute_bf_table(space: MetricSpace, p_max: int | None = None) -> BackAndForthTable:
    """Refine colours level by level until no tuple length splits further.

    All lengths up to ``|M|`` are refined together: the step at length ``p``
    reads length ``p + 1``, so a per-length fixed point would be unsound.
    ``p_max`` only limits what :meth:`BackAndForthTable.to_json` exports.
    """
    n = space.n
    if p_max is None:
        p_max = n
    if p_max < 1:
        raise PreconditionError("p_max must be at least 1")
    d = space.idist
    tuples = _distinct_tuples(n)
    index = [{t: i for i, t in enumerate(ts)} for ts in tuples]
    # extension indices: ext[p][i] = indices in tuples[p+1] of t + (x,), x not in t
    ext = []
    for p in range(n):
        nxt = index[p + 1]
        ext.append([[nxt[t + (x,)] for x in range(n) if x not in t] for t in tuples[p]])
    ext.append([[] for _ in tuples[n]])

    def relabel(signatures):
        ids: dict = {}
        return [ids.setdefault(s, len(ids)) for s in signatures]

    level0 = [relabel(tuple(d[t[i]][t[j]] for i in range(len(t)) for j in range(i + 1, len(t)))
                      for t in ts) for ts in tuples]
    colours = [level0]
    counts = [len(set(c)) for c in level0]
    while True:
        prev = colours[-1]
        nxt_level = []
        for p in range(n + 1):
            up = prev[p + 1] if p < n else None
            sigs = [(prev[p][i], tuple(sorted({up[j] for j in ext[p][i]})) if up else ())
                    for i in range(len(tuples[p]))]
            nxt_level.append(relabel(sigs))
        new_counts = [len(set(c)) for c in nxt_level]
        if new_counts == counts:
            break
        colours.append(nxt_level)
        counts = new_counts
    return BackAndForthTable(space, min(p_max, n), tuples, index, colours, len(colours) - 1)


_TABLES: dict = {}


def _table_for(space: MetricSpace) -> BackAndForthTable:
    key = space.dumps()
    table = _TABLES.get(key)
    if table is None:
        if len(_TABLES) > 64:
            _TABLES.clear()
        table = _TABLES[key] = compute_bf_table(space)
    return table


def scott_rank_pair(space: MetricSpace, a: Sequence[int], b: Sequence[int],
                    table: BackAndForthTable | None = None) -> RankValue:
    return (table or _table_for(space)).rank(a, b)


@dataclass(frozen=True)
class SpaceRank:
    rank: RankValue
    tuple_a: tuple
    tuple_b: tuple | None
    pair_rank: RankValue | None

    def to_json(self) -> dict:
        return {
            "rank": str(self.rank),
            "certificate": {
                "a": list(self.tuple_a),
                "b": None if self.tuple_b is None else list(self.tuple_b),
                "pair_rank": None if self.pair_rank is None else str(self.pair_rank),
                "tuple_rank": str(Finite(self.rank.value - 1)),
            },
        }


def scott_rank_space(space: MetricSpace, table: BackAndForthTable | None = None) -> SpaceRank:
    """sup of SR(a) + 1 over distinct-point tuples, SR(a) the sup of finite pair ranks.

    An empty supremum counts as 0.  The certificate is the first pair (in
    length-then-lexicographic order) attaining the maximum.
    """
    table = table or _table_for(space)
    best = (-1, (), None, None)
    for p, ts in enumerate(table.tuples):
        for a in ts:
            sr_a, arg = 0, (None, None)
            for b in ts:
                r = table._rank_distinct(a, b)
                if r.is_finite and (arg[0] is None or r.value > sr_a):
                    sr_a, arg = r.value, (b, r)
            if sr_a > best[0]:
                best = (sr_a, a, *arg)
    return SpaceRank(Finite(best[0] + 1), best[1], best[2], best[3])


def distinguishing_strategy(space: MetricSpace, a: Sequence[int], b: Sequence[int],
                            table: BackAndForthTable | None = None):
    """Player-1 strategy winning the EF game at budget ``SR(a, b)``, read off the table.

    A rank-0 pair gets the empty strategy plus the indices ``(i, j)`` of a
    distance that disagrees.
    """
    from .games import Strategy

    table = table or _table_for(space)
    a, b = tuple(a), tuple(b)
    sr = table.rank(a, b)
    if not sr.is_finite:
        raise PreconditionError("pair has rank inf; no distinguishing strategy exists")
    witness = _atomic_witness(space, a, b) if sr.value == 0 else None
    return Strategy("ef", 1, space, a, b, sr.value, _TablePolicy(table), witness=witness)


def _atomic_witness(space: MetricSpace, a, b):
    d = space.idist
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if d[a[i]][a[j]] != d[b[i]][b[j]]:
                return (i, j)
    if collapse(a, b) is None:
        # repeated point on one side only: some distance 0 faces a positive one
        for i in range(len(a)):
            for j in range(i + 1, len(a)):
                if (a[i] == a[j]) != (b[i] == b[j]):
                    return (i, j)
    return None


class _TablePolicy:
    """At rank ``s``, play ordinal ``s - 1`` at the least point (left first)
    whose every answer drops the rank to at most ``s - 1``."""

    def __init__(self, table: BackAndForthTable):
        self.table = table

    def node_key(self, state):
        return None

    def _drops(self, pairs, beta) -> bool:
        for l, r in pairs:
            rank = self.table.rank(l, r)
            if not rank.is_finite or rank.value > beta:
                return False
        return True

    def move(self, state):
        from .games import LEFT, RIGHT, Move

        left, right = state.left, state.right
        sr = self.table.rank(left, right)
        if not sr.is_finite:
            raise PreconditionError("distinguishing strategy reached an indistinguishable position")
        if sr.value == 0:
            return Move(0, LEFT, 0)
        beta = sr.value - 1
        pts = range(self.table.space.n)
        for x in pts:
            if self._drops(((left + (x,), right + (y,)) for y in pts), beta):
                return Move(beta, LEFT, x)
            if self._drops(((left + (y,), right + (x,)) for y in pts), beta):
                return Move(beta, RIGHT, x)
        raise AssertionError("finite rank without a distinguishing move")
