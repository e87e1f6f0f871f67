"""Ehrenfeucht-Fraisse games and tolerance-scheduled approximation games.

Both games are solved by backward induction over memoized positions.

EF positions are collapsed to pairs of distinct-point tuples (a repeated
point can only be answered by its partner).  Two facts keep the search
finite and small:

* winning for Player 2 is monotone in the budget, so from budget ``r`` only
  the move ordinal ``r - 1`` needs examining when deciding the winner;
* on an ``N``-point space, a pair of distinct ``k``-tuples related at level
  ``N - k`` is carried by an autoisometry (Player 1 names every remaining
  point, the answers assemble into a total distance-preserving map), so
  budgets above ``N - k`` behave exactly like ``N - k``.

Approximation positions keep, for every pair ``(x, y)`` already on the
board, only what still matters for future moves: for each future move index
the largest admissible error, expressed as a rank in the sorted set of
achievable distance differences.  Those sequences become constant after
finitely many moves, and once the schedule is small enough that new moves
must agree exactly with each other, only the parity of the move index still
matters.  In that stationary regime a covering argument again bounds the
useful budget by twice the number of left points not yet matched exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import IllegalMoveError, InternalError, ParseError, PreconditionError, StrategyError
from .metric import MetricSpace, format_rational, parse_rational
from .ranks import INFINITY, OMEGA, Finite, RankValue

OMEGA_BUDGET = math.inf
LEFT, RIGHT = "left", "right"
TREE_NODE_LIMIT = 250_000


# --------------------------------------------------------------------------
# schedules, moves, budgets


@dataclass(frozen=True)
class Geometric:
    """Tolerance schedule ``f(n) = base * ratio**n`` with ``0 < ratio < 1``."""

    base: Fraction
    ratio: Fraction
    _values: list = field(default_factory=list, init=False, compare=False, repr=False)
    _tables: dict = field(default_factory=dict, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "base", Fraction(self.base))
        object.__setattr__(self, "ratio", Fraction(self.ratio))
        if self.base <= 0:
            raise PreconditionError("schedule base must be positive")
        if not 0 < self.ratio < 1:
            raise PreconditionError("schedule ratio must lie strictly between 0 and 1")

    def __call__(self, n: int) -> Fraction:
        values = self._values
        while len(values) <= n:
            values.append(self.base * self.ratio ** len(values))
        return values[n]

    def scaled_bounds(self, scale: int, k: int) -> tuple:
        """``(single, double)`` with ``single[j]`` the pair (num, den) of ``scale * f(j)``
        and ``double[i][j]`` that of ``scale * (f(i) + f(j))``, for ``i, j < k``."""
        hit = self._tables.get((scale, k))
        if hit is None:
            fs = [self(j) * scale for j in range(k)]
            single = [(q.numerator, q.denominator) for q in fs]
            double = [[((p + q).numerator, (p + q).denominator) for q in fs] for p in fs]
            hit = self._tables[(scale, k)] = (single, double)
        return hit

    def to_json(self) -> dict:
        return {"base": format_rational(self.base), "ratio": format_rational(self.ratio)}

    @classmethod
    def from_json(cls, doc: dict) -> "Geometric":
        try:
            return cls(parse_rational(doc["base"]), parse_rational(doc["ratio"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed schedule: {exc}") from None

    @classmethod
    def parse(cls, text: str) -> "Geometric":
        """``geometric:q,r``"""
        kind, _, rest = text.partition(":")
        if kind.strip().lower() != "geometric" or rest.count(",") != 1:
            raise ParseError(f"schedule must look like geometric:q,r (got {text!r})")
        q, r = rest.split(",")
        return cls(parse_rational(q), parse_rational(r))

    def __str__(self):
        return f"geometric:{format_rational(self.base)},{format_rational(self.ratio)}"


ToleranceSchedule = Geometric
DEFAULT_FAMILY = (Geometric(Fraction(1, 4), Fraction(1, 2)), Geometric(Fraction(1, 16), Fraction(1, 2)))


@dataclass(frozen=True, order=True)
class Move:
    ordinal: int
    side: str
    point: int

    def to_json(self) -> dict:
        return {"ordinal": self.ordinal, "side": self.side, "point": self.point}

    @classmethod
    def from_json(cls, doc) -> "Move":
        try:
            if isinstance(doc, (list, tuple)):
                ordinal, side, point = doc
            else:
                ordinal, side, point = doc["ordinal"], doc["side"], doc["point"]
            move = cls(int(ordinal), str(side), int(point))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed move {doc!r}: {exc}") from None
        if move.side not in (LEFT, RIGHT):
            raise ParseError(f"move side must be left or right, got {move.side!r}")
        return move


def budget_from(alpha) -> float | int:
    """Accept a RankValue, an int, or the strings ``"omega"`` / digits."""
    if isinstance(alpha, RankValue):
        if alpha.kind == "omega":
            return OMEGA_BUDGET
        if alpha.kind == "inf":
            raise PreconditionError("a game budget must be finite or omega")
        return alpha.value
    if isinstance(alpha, str):
        return budget_from(RankValue.parse(alpha))
    if alpha == OMEGA_BUDGET:
        return OMEGA_BUDGET
    if isinstance(alpha, bool) or not isinstance(alpha, int) or alpha < 0:
        raise PreconditionError(f"invalid budget {alpha!r}")
    return alpha


def budget_str(budget) -> str | int:
    return "omega" if budget == OMEGA_BUDGET else int(budget)


def _check_pair(space: MetricSpace, a, b) -> tuple[tuple, tuple]:
    a, b = tuple(a), tuple(b)
    if len(a) != len(b):
        raise PreconditionError(f"tuple lengths differ: {len(a)} vs {len(b)}")
    for x in (*a, *b):
        space.index(x)
    return a, b


def _collapse(left, right):
    """Distinct-point pair with the same content, or None on a pattern clash."""
    fwd: dict = {}
    back: dict = {}
    out_l, out_r = [], []
    for x, y in zip(left, right):
        if x in fwd or y in back:
            if fwd.get(x) != y or back.get(y) != x:
                return None
            continue
        fwd[x] = y
        back[y] = x
        out_l.append(x)
        out_r.append(y)
    return tuple(out_l), tuple(out_r)


# --------------------------------------------------------------------------
# game states (the referee)


class EFState:
    """A position of the EF game: both full sequences plus the current budget."""

    kind = "ef"

    def __init__(self, space: MetricSpace, a, b, budget, history=(), _sides=None):
        self.space = space
        self.a, self.b = a, b
        self.budget = budget
        self.history = history
        if _sides is None:
            _sides = (a + tuple(m.point if m.side == LEFT else y for m, y in history),
                      b + tuple(y if m.side == LEFT else m.point for m, y in history))
        self.left, self.right = _sides
        self._key = None

    @property
    def over(self) -> bool:
        return self.budget == 0

    def p1_moves(self) -> Iterable[Move]:
        top = self.budget if self.budget != OMEGA_BUDGET else self.space.n + 1
        for beta in range(int(top)):
            for x in range(self.space.n):
                yield Move(beta, LEFT, x)
                yield Move(beta, RIGHT, x)

    def check_move(self, move: Move, index: int = 0):
        if self.over:
            raise IllegalMoveError(f"move {index}: the game is already over", index)
        if move.side not in (LEFT, RIGHT):
            raise IllegalMoveError(f"move {index}: bad side {move.side!r}", index)
        if not 0 <= move.ordinal < self.budget:
            raise IllegalMoveError(
                f"move {index}: ordinal {move.ordinal} not below budget {budget_str(self.budget)}", index)
        if not 0 <= move.point < self.space.n:
            raise IllegalMoveError(f"move {index}: point {move.point} out of range", index)

    def check_reply(self, reply: int, index: int = 0):
        if not isinstance(reply, int) or not 0 <= reply < self.space.n:
            raise IllegalMoveError(f"reply {index}: point {reply!r} out of range", index)

    def after(self, move: Move, reply: int) -> "EFState":
        x, y = (move.point, reply) if move.side == LEFT else (reply, move.point)
        child = EFState(self.space, self.a, self.b, move.ordinal, self.history + ((move, reply),),
                        (self.left + (x,), self.right + (y,)))
        pair = self.key()[0]
        if pair == "lost":
            child._key = ("lost", child.budget)
        else:
            L, R = pair
            if x in L or y in R:
                same = x in L and y in R and L.index(x) == R.index(y)
                child._key = (pair, child.budget) if same else ("lost", child.budget)
            else:
                child._key = ((L + (x,), R + (y,)), child.budget)
        return child

    def broken(self) -> bool:
        """Some pair of positions already disagrees, so Player 2 has lost."""
        return self.key()[0] == "lost" or not self.p2_wins_final()

    def p2_wins_final(self) -> bool:
        d = self.space.dist
        lt, rt = self.left, self.right
        return all(d[lt[i]][lt[j]] == d[rt[i]][rt[j]]
                   for i in range(len(lt)) for j in range(i + 1, len(lt)))

    def key(self):
        if self._key is None:
            pair = _collapse(self.left, self.right)
            self._key = ("lost", self.budget) if pair is None else (pair, self.budget)
        return self._key


def approx_conditions_hold(space: MetricSpace, a, b, c, d, f: Geometric) -> bool:
    """The two end-of-game families of strict inequalities, checked on Fractions."""
    # integer distances against tolerances on the same scale: |u - v| < p/q iff q|u - v| < p
    D = space.idist
    single, double = f.scaled_bounds(space.scale, len(c))
    for j in range(len(c)):
        p, q = single[j]
        for i in range(len(a)):
            if not q * abs(D[a[i]][c[j]] - D[b[i]][d[j]]) < p:
                return False
        for i in range(len(c)):
            p, q = double[i][j]
            if not q * abs(D[c[i]][c[j]] - D[d[i]][d[j]]) < p:
                return False
    return True


class ApproxState:
    """A position of the approximation game; the side is fixed by move parity."""

    kind = "approx"

    def __init__(self, solver: "ApproxSolver", a, b, budget, history=(), entries=None, lost=False):
        self.solver = solver
        self.space = solver.space
        self.a, self.b = a, b
        self.budget = budget
        self.history = history
        self.j = len(history)
        self.entries = solver.initial_entries(a, b) if entries is None else entries
        self.lost = lost

    @property
    def side(self) -> str:
        return LEFT if self.j % 2 == 0 else RIGHT

    @property
    def over(self) -> bool:
        return self.budget == 0

    @property
    def c(self):
        return tuple(m.point if m.side == LEFT else y for m, y in self.history)

    @property
    def d(self):
        return tuple(y if m.side == LEFT else m.point for m, y in self.history)

    def p1_moves(self) -> Iterable[Move]:
        top = self.budget if self.budget != OMEGA_BUDGET else self.solver.omega_cap(self.j)
        for beta in range(int(top)):
            for x in range(self.space.n):
                yield Move(beta, self.side, x)

    def check_move(self, move: Move, index: int = 0):
        if self.over:
            raise IllegalMoveError(f"move {index}: the game is already over", index)
        if move.side != self.side:
            raise IllegalMoveError(
                f"move {index}: Player 1 must play on the {self.side} side at move index {self.j}", index)
        if not 0 <= move.ordinal < self.budget:
            raise IllegalMoveError(
                f"move {index}: ordinal {move.ordinal} not below budget {budget_str(self.budget)}", index)
        if not 0 <= move.point < self.space.n:
            raise IllegalMoveError(f"move {index}: point {move.point} out of range", index)

    check_reply = EFState.check_reply

    def after(self, move: Move, reply: int) -> "ApproxState":
        x, y = (move.point, reply) if move.side == LEFT else (reply, move.point)
        entries = None
        lost = self.lost
        if not lost:
            entries = self.solver.extend(self.j, self.entries, x, y)
            lost = entries is None
        return ApproxState(self.solver, self.a, self.b, move.ordinal,
                           self.history + ((move, reply),), entries if not lost else (), lost)

    def broken(self) -> bool:
        return self.lost

    def p2_wins_final(self) -> bool:
        return approx_conditions_hold(self.space, self.a, self.b, self.c, self.d, self.solver.f)

    def key(self):
        if self.lost:
            return ("lost", self.solver.jtag(self.j), self.budget)
        return (self.solver.jtag(self.j), self.budget, self.entries)


# --------------------------------------------------------------------------
# EF solver


class EFSolver:
    """Memoized winner of EF games on one space, shared across pairs."""

    def __init__(self, space: MetricSpace):
        self.space = space
        self.n = space.n
        self.D = space.idist
        self.memo: dict = {}

    def _compatible(self, L, R, x):
        D = self.D
        rows_l = [D[p] for p in L]
        rows_r = [D[q] for q in R]
        return [y for y in range(self.n) if y not in R
                and all(rl[x] == rr[y] for rl, rr in zip(rows_l, rows_r))]

    def atomic(self, L, R) -> bool:
        D = self.D
        return all(D[L[i]][L[j]] == D[R[i]][R[j]] for i in range(len(L)) for j in range(i + 1, len(L)))

    def wins(self, L: tuple, R: tuple, r) -> bool:
        """Player 2 wins from distinct tuples ``L``, ``R`` with budget ``r``."""
        r = min(r, self.n - len(L))
        key = (L, R, r)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        result = self.atomic(L, R) and (r == 0 or self._extendable(L, R, r - 1))
        self.memo[key] = result
        return result

    def _extendable(self, L, R, beta) -> bool:
        for x in range(self.n):
            if x not in L and not any(self.wins(L + (x,), R + (y,), beta)
                                      for y in self._compatible(L, R, x)):
                return False
        for y in range(self.n):
            if y not in R and not any(self.wins(L + (x,), R + (y,), beta)
                                      for x in self._compatible(R, L, y)):
                return False
        return True

    def reply_wins(self, L, R, move: Move, reply: int) -> bool:
        x, y = (move.point, reply) if move.side == LEFT else (reply, move.point)
        if x not in L and y not in R:
            return self.wins(L + (x,), R + (y,), move.ordinal)
        pair = _collapse(L + (x,), R + (y,))
        return pair is not None and self.wins(pair[0], pair[1], move.ordinal)

    def p2_reply(self, L, R, move: Move) -> int:
        """Least reply keeping Player 2 winning; least point if none does."""
        for y in range(self.n):
            if self.reply_wins(L, R, move, y):
                return y
        return 0

    def p1_move(self, L, R, budget) -> Move:
        """Least ordinal, then least point, then left: a move every reply loses to."""
        if not self.atomic(L, R):
            return Move(0, LEFT, 0)
        top = min(budget, self.n - len(L) + 1)
        for beta in range(int(top)):
            for x in range(self.n):
                for side in (LEFT, RIGHT):
                    move = Move(beta, side, x)
                    if not any(self.reply_wins(L, R, move, y) for y in range(self.n)):
                        return move
        raise InternalError("Player 1 has no winning move in a position Player 2 loses")

    def mirror(self, L, R) -> tuple:
        """Autoisometry assembled by naming every point on the left in turn."""
        r = self.n - len(L)
        if not self.wins(L, R, r):
            raise PreconditionError("pair is not related at the covering level")
        for x in range(self.n):
            if x in L:
                continue
            y = self.p2_reply(L, R, Move(r - 1, LEFT, x))
            L, R, r = L + (x,), R + (y,), r - 1
        perm = [0] * self.n
        for x, y in zip(L, R):
            perm[x] = y
        if not self.atomic(L, R):
            raise InternalError("covering play produced a non-isometric map")
        return tuple(perm)


# --------------------------------------------------------------------------
# approximation-game solver


class ApproxSolver:
    """Memoized winner of approximation games for one space and one schedule."""

    def __init__(self, space: MetricSpace, f: Geometric):
        self.space = space
        self.f = f
        self.n = space.n
        self.D = space.idist
        values = sorted({v for row in self.D for v in row})
        diffs = sorted({abs(u - v) for u in values for v in values})
        self.diffs = diffs
        self.diff_rank = {s: i for i, s in enumerate(diffs)}
        self.scale = space.scale
        self.gap = diffs[1] if len(diffs) > 1 else None
        # J: new moves agree exactly with each other from here on
        j = 0
        while self.gap is not None and 2 * self._fs(j) > self.gap:
            j += 1
        self.exact_from = j
        # J*: every tolerance class created before J has settled
        stable = j
        for t in [Fraction(0)] + [self._fs(i) for i in range(j)]:
            k = 0
            while self._rho(t + self._fs(k)) != self._rho_limit(t):
                k += 1
            stable = max(stable, k)
        self.stationary_from = stable
        self._cls: dict = {}
        self.memo: dict = {}
        self.use_mirrors = True
        self._mirror_memo: dict = {}
        self._ext_memo: dict = {}

    # tolerance classes -------------------------------------------------
    def _fs(self, j: int) -> Fraction:
        return self.f(j) * self.scale

    def _rho(self, bound: Fraction) -> int:
        """Number of achievable differences strictly below ``bound``."""
        return sum(1 for s in self.diffs if s < bound)

    def _rho_limit(self, t: Fraction) -> int:
        return sum(1 for s in self.diffs if s <= t)

    def cls(self, source, j: int) -> tuple:
        """Admissible-difference ranks, from move index ``j`` on, for an entry
        created at ``source`` (``-1`` for the base pairs)."""
        key = (source, j)
        hit = self._cls.get(key)
        if hit is None:
            t = Fraction(0) if source < 0 else self._fs(source)
            limit = self._rho_limit(t)
            out = []
            k = j
            while True:
                v = self._rho(t + self._fs(k))
                out.append(v)
                if v == limit:
                    break
                k += 1
            hit = self._cls[key] = tuple(out)
        return hit

    def jtag(self, j: int):
        return ("p", j % 2) if j >= self.stationary_from else ("j", j)

    def omega_cap(self, j: int) -> int:
        """A budget that already behaves like omega from move index ``j``."""
        return max(self.stationary_from - j, 0) + 2 * self.n

    def _merge(self, items):
        full = len(self.diffs)
        merged: dict = {}
        for x, y, c, mv in items:
            if c[-1] >= full:
                continue  # never constrains anything again
            old = merged.get((x, y))
            if old is not None:
                oc, omv = old
                size = max(len(c), len(oc))
                pad = lambda s: s + (s[-1],) * (size - len(s))
                m = tuple(min(p, q) for p, q in zip(pad(c), pad(oc)))
                while len(m) > 1 and m[-1] == m[-2]:
                    m = m[:-1]
                c, mv = m, mv or omv
            merged[(x, y)] = (c, mv)
        return tuple(sorted((x, y, c, mv) for (x, y), (c, mv) in merged.items()))

    def initial_entries(self, a, b) -> tuple:
        return self._merge((x, y, self.cls(-1, 0), False) for x, y in zip(a, b))

    def valid(self, entries, x, y) -> bool:
        D, rank = self.D, self.diff_rank
        for ex, ey, c, _ in entries:
            if rank[abs(D[ex][x] - D[ey][y])] >= c[0]:
                return False
        return True

    def extend(self, j, entries, x, y):
        """Entries after the pair ``(x, y)`` is played at index ``j``; None if it breaks a bound."""
        key = (j, entries, x, y)
        if key in self._ext_memo:
            return self._ext_memo[key]
        out = None
        if self.valid(entries, x, y):
            shifted = [(ex, ey, c[1:] if len(c) > 1 else c, mv) for ex, ey, c, mv in entries]
            shifted.append((x, y, self.cls(j, j + 1), True))
            out = self._merge(shifted)
        self._ext_memo[key] = out
        return out

    # solving ------------------------------------------------------------
    def _effective(self, j, r, entries):
        if j >= self.stationary_from:
            covered = {ex for ex, _, c, mv in entries if mv and c == (1,)}
            return min(r, 2 * (self.n - len(covered)))
        if r != OMEGA_BUDGET and r >= self.omega_cap(j):
            return OMEGA_BUDGET
        return r

    def wins(self, j: int, r, entries) -> bool:
        r = self._effective(j, r, entries)
        key = (self.jtag(j), r, entries)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        if r == 0 or (self.use_mirrors and self.mirror_for(entries) is not None):
            result = True
        else:
            beta = r - 1
            left = j % 2 == 0
            result = True
            for p in range(self.n):
                if not any(self._reply_ok(j, beta, entries, p, q, left) for q in range(self.n)):
                    result = False
                    break
        self.memo[key] = result
        return result

    def mirror_for(self, entries):
        """An autoisometry whose exact answers respect every entry forever, if any.

        Answering through such a map wins at every budget, so positions
        admitting one need no search.
        """
        hit = self._mirror_memo.get(entries, False)
        if hit is not False:
            return hit
        D, rank, n = self.D, self.diff_rank, self.n
        limits = [(ex, ey, c[-1]) for ex, ey, c, _ in entries]
        phi = [-1] * n
        used = [False] * n

        def ok(c, z):
            row_c, row_z = D[c], D[z]
            for i in range(c):
                if row_c[i] != row_z[phi[i]]:
                    return False
            return all(rank[abs(D[ex][c] - D[ey][z])] < lim for ex, ey, lim in limits)

        def search(c):
            if c == n:
                return True
            for z in range(n):
                if not used[z] and ok(c, z):
                    phi[c], used[z] = z, True
                    if search(c + 1):
                        return True
                    used[z] = False
            phi[c] = -1
            return False

        result = tuple(phi) if search(0) else None
        self._mirror_memo[entries] = result
        return result

    def _reply_ok(self, j, beta, entries, p, q, left) -> bool:
        nxt = self.extend(j, entries, p, q) if left else self.extend(j, entries, q, p)
        return nxt is not None and self.wins(j + 1, beta, nxt)

    def p2_reply(self, state: ApproxState, move: Move) -> int:
        if not state.lost:
            left = move.side == LEFT
            for q in range(self.n):
                if self._reply_ok(state.j, move.ordinal, state.entries, move.point, q, left):
                    return q
        return 0

    def p1_move(self, state: ApproxState) -> Move:
        side = state.side
        if state.lost:
            return Move(0, side, 0)
        top = state.budget if state.budget != OMEGA_BUDGET else self.omega_cap(state.j)
        top = min(top, self.omega_cap(state.j))
        left = side == LEFT
        for beta in range(int(top)):
            for p in range(self.n):
                if not any(self._reply_ok(state.j, beta, state.entries, p, q, left) for q in range(self.n)):
                    return Move(beta, side, p)
        raise InternalError("Player 1 has no winning move in a position Player 2 loses")


# --------------------------------------------------------------------------
# strategies


class _Policy:
    """Chooses the designated player's moves from a game state."""

    def node_key(self, state):
        return None


class EFSolverPolicy(_Policy):
    def __init__(self, solver: EFSolver, player: int):
        self.solver = solver
        self.player = player

    def move(self, state: EFState) -> Move:
        pair = state.key()[0]
        if pair == "lost":
            return Move(0, LEFT, 0)
        return self.solver.p1_move(pair[0], pair[1], state.budget)

    def reply(self, state: EFState, move: Move) -> int:
        pair = state.key()[0]
        if pair == "lost":
            return 0
        L, R = pair
        if move.side == LEFT and move.point in L:
            return R[L.index(move.point)]
        if move.side == RIGHT and move.point in R:
            return L[R.index(move.point)]
        return self.solver.p2_reply(L, R, move)


class MirrorPolicy(_Policy):
    """Player 2 answers through a fixed autoisometry."""

    def __init__(self, perm: Sequence[int]):
        self.perm = tuple(perm)
        self.inverse = tuple(sorted(range(len(perm)), key=lambda i: perm[i]))

    def reply(self, state, move: Move) -> int:
        return self.perm[move.point] if move.side == LEFT else self.inverse[move.point]


class ApproxSolverPolicy(_Policy):
    def __init__(self, solver: ApproxSolver):
        self.solver = solver

    def move(self, state: ApproxState) -> Move:
        return self.solver.p1_move(state)

    def reply(self, state: ApproxState, move: Move) -> int:
        return self.solver.p2_reply(state, move)


class TreePolicy(_Policy):
    """Strategy read from a serialized tree; missing branches raise StrategyError."""

    def __init__(self, tree: dict, player: int):
        self.tree = tree
        self.player = player
        self._index: dict = {}

    def _children(self, node) -> dict:
        key = id(node)
        hit = self._index.get(key)
        if hit is None:
            hit = {}
            for ch in node.get("children", ()):
                opp = ch["opponent"]
                hit[opp if isinstance(opp, int) else Move.from_json(opp)] = ch["node"]
            self._index[key] = hit
        return hit

    def _node(self, history):
        node = self.tree
        for move, reply in history:
            opp = reply if self.player == 1 else move
            node = self._children(node).get(opp)
            if node is None:
                raise StrategyError(f"strategy tree has no branch for opponent move {opp!r}",
                                    line=list(history))
        return node

    def node_key(self, state):
        return id(self._node(state.history))

    def move(self, state) -> Move:
        node = self._node(state.history)
        if node.get("move") is None:
            raise StrategyError("strategy tree has no move at a live position", line=list(state.history))
        return Move.from_json(node["move"])

    def reply(self, state, move: Move) -> int:
        node = self._node(state.history)
        child = self._children(node).get(move)
        if child is None or child.get("move") is None:
            raise StrategyError(f"strategy tree has no reply to {move.to_json()}", line=list(state.history))
        return int(child["move"])


@dataclass
class Strategy:
    game: str  # "ef" | "approx"
    player: int
    space: MetricSpace
    a: tuple
    b: tuple
    budget: object  # int or OMEGA_BUDGET
    policy: object
    schedule: Geometric | None = None
    witness: tuple | None = None
    solver: object = field(default=None, repr=False)

    def initial_state(self):
        if self.game == "ef":
            return EFState(self.space, self.a, self.b, self.budget)
        solver = self.solver if isinstance(self.solver, ApproxSolver) else ApproxSolver(self.space, self.schedule)
        self.solver = solver
        return ApproxState(solver, self.a, self.b, self.budget)

    def tree(self, limit: int = TREE_NODE_LIMIT) -> dict:
        count = [0]

        def bump():
            count[0] += 1
            if count[0] > limit:
                raise PreconditionError(f"strategy tree exceeds {limit} nodes; lower the budget")

        def p1(state):
            bump()
            if state.over:
                return {"move": None, "children": []}
            m = self.policy.move(state)
            return {"move": m.to_json(),
                    "children": [{"opponent": y, "node": p1(state.after(m, y))}
                                 for y in range(self.space.n)]}

        def p2(state, reply):
            bump()
            children = []
            if not state.over:
                for m in state.p1_moves():
                    y = self.policy.reply(state, m)
                    children.append({"opponent": m.to_json(), "node": p2(state.after(m, y), y)})
            return {"move": reply, "children": children}

        root = self.initial_state()
        return p1(root) if self.player == 1 else p2(root, None)

    def to_json(self, limit: int = TREE_NODE_LIMIT) -> dict:
        doc = {
            "game": self.game,
            "player": self.player,
            "pair": {"a": list(self.a), "b": list(self.b)},
            "budget": budget_str(self.budget),
        }
        if self.schedule is not None:
            doc["schedule"] = self.schedule.to_json()
        if self.witness is not None:
            doc["witness"] = list(self.witness)
        if isinstance(self.policy, MirrorPolicy):
            doc["mirror"] = list(self.policy.perm)
            doc["tree"] = None
        else:
            doc["tree"] = self.tree(limit)
        return doc

    @classmethod
    def from_json(cls, doc: dict, space: MetricSpace) -> "Strategy":
        try:
            game, player = doc["game"], int(doc["player"])
            a, b = _check_pair(space, doc["pair"]["a"], doc["pair"]["b"])
            budget = budget_from(doc["budget"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed certificate: {exc}") from None
        if game not in ("ef", "approx") or player not in (1, 2):
            raise ParseError("certificate needs game ef|approx and player 1|2")
        schedule = Geometric.from_json(doc["schedule"]) if doc.get("schedule") else None
        if game == "approx" and schedule is None:
            raise ParseError("approximation certificate lacks a schedule")
        if doc.get("mirror") is not None:
            perm = [int(i) for i in doc["mirror"]]
            if sorted(perm) != list(range(space.n)):
                raise ParseError("mirror must be a permutation of the points")
            policy = MirrorPolicy(perm)
        else:
            if not isinstance(doc.get("tree"), dict):
                raise ParseError("certificate has neither a tree nor a mirror")
            policy = TreePolicy(doc["tree"], player)
        witness = tuple(doc["witness"]) if doc.get("witness") is not None else None
        return cls(game, player, space, a, b, budget, policy, schedule, witness)


@dataclass
class GameOutcome:
    winner: int
    strategy: Strategy
    explored: int = 0

    def to_json(self, limit: int = TREE_NODE_LIMIT) -> dict:
        return {"winner": self.winner, "explored": self.explored, "certificate": self.strategy.to_json(limit)}


# --------------------------------------------------------------------------
# solving


_EF_CACHE: dict = {}
_APPROX_CACHE: dict = {}


def ef_solver_for(space: MetricSpace) -> EFSolver:
    key = space.dumps()
    if key not in _EF_CACHE:
        if len(_EF_CACHE) > 32:
            _EF_CACHE.clear()
        _EF_CACHE[key] = EFSolver(space)
    return _EF_CACHE[key]


def approx_solver_for(space: MetricSpace, f: Geometric) -> ApproxSolver:
    key = (space.dumps(), f)
    if key not in _APPROX_CACHE:
        if len(_APPROX_CACHE) > 32:
            _APPROX_CACHE.clear()
        _APPROX_CACHE[key] = ApproxSolver(space, f)
    return _APPROX_CACHE[key]


def solve_ef_game(space: MetricSpace, a, b, alpha, solver: EFSolver | None = None) -> GameOutcome:
    a, b = _check_pair(space, a, b)
    budget = budget_from(alpha)
    solver = solver or ef_solver_for(space)
    before = len(solver.memo)
    pair = _collapse(a, b)
    p2 = pair is not None and solver.wins(pair[0], pair[1], budget)
    explored = len(solver.memo) - before
    if p2 and budget == OMEGA_BUDGET:
        policy = MirrorPolicy(solver.mirror(*pair))
        return GameOutcome(2, Strategy("ef", 2, space, a, b, budget, policy), explored)
    winner = 2 if p2 else 1
    policy = EFSolverPolicy(solver, winner)
    witness = _mismatch(space, a, b) if winner == 1 else None
    return GameOutcome(winner, Strategy("ef", winner, space, a, b, budget, policy, witness=witness), explored)


def _mismatch(space, a, b):
    d = space.dist
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if d[a[i]][a[j]] != d[b[i]][b[j]]:
                return (i, j)
    return None


def solve_approx_game(space: MetricSpace, a, b, alpha, f: Geometric,
                      solver: ApproxSolver | None = None) -> GameOutcome:
    a, b = _check_pair(space, a, b)
    budget = budget_from(alpha)
    solver = solver or approx_solver_for(space, f)
    if solver.f != f:
        raise PreconditionError("solver was built for a different schedule")
    before = len(solver.memo)
    state = ApproxState(solver, a, b, budget)
    p2 = solver.wins(0, budget, state.entries)
    explored = len(solver.memo) - before
    winner = 2 if p2 else 1
    strategy = Strategy("approx", winner, space, a, b, budget, ApproxSolverPolicy(solver), f, solver=solver)
    return GameOutcome(winner, strategy, explored)


def approx_related(space: MetricSpace, a, b, alpha, f: Geometric, solver: ApproxSolver | None = None) -> bool:
    a, b = _check_pair(space, a, b)
    solver = solver or approx_solver_for(space, f)
    return solver.wins(0, budget_from(alpha), solver.initial_entries(a, b))


def metric_rank_upper(space: MetricSpace, a, b, family: Sequence[Geometric] = DEFAULT_FAMILY,
                      solvers: dict | None = None) -> RankValue:
    """Least budget at which some schedule of ``family`` defeats Player 2.

    This bounds from above the metric rank, which ranges over every
    admissible schedule.  Infinity means every schedule of ``family`` loses
    for Player 1 at budget omega.
    """
    family = list(family)
    if not family:
        raise PreconditionError("metric_rank_upper needs a nonempty schedule family")
    a, b = _check_pair(space, a, b)
    best = INFINITY
    for f in family:
        solver = (solvers or {}).get(f) or approx_solver_for(space, f)
        entries = solver.initial_entries(a, b)
        if solver.wins(0, OMEGA_BUDGET, entries):
            continue
        mu = 1
        while solver.wins(0, mu, entries):
            mu += 1
        best = min(best, Finite(mu))
    return best


# --------------------------------------------------------------------------
# replay and checking


@dataclass
class Verdict:
    winner: int
    transcript: list

    def to_json(self) -> dict:
        return {"winner": self.winner,
                "transcript": [{"move": m.to_json(), "reply": y} for m, y in self.transcript]}


def _as_strategy(obj) -> Strategy:
    return obj.strategy if isinstance(obj, GameOutcome) else obj


def replay_game(outcome, opponent_script: Sequence) -> Verdict:
    """Play the stored strategy against a scripted opponent.

    The script lists Player 2's replies (points) against a Player-1 strategy,
    or Player 1's moves against a Player-2 strategy, and must last exactly
    until the game ends.
    """
    strategy = _as_strategy(outcome)
    state = strategy.initial_state()
    script = list(opponent_script)
    i = 0
    while not state.over:
        if i >= len(script):
            raise IllegalMoveError(f"script ended after {i} moves but the game is not over", i)
        if strategy.player == 1:
            move = strategy.policy.move(state)
            reply = script[i]
            state.check_move(move, i)
            if isinstance(reply, bool) or not isinstance(reply, int):
                raise IllegalMoveError(f"reply {i}: expected a point index, got {reply!r}", i)
            state.check_reply(reply, i)
        else:
            move = script[i] if isinstance(script[i], Move) else Move.from_json(script[i])
            state.check_move(move, i)
            reply = strategy.policy.reply(state, move)
            state.check_reply(reply, i)
        state = state.after(move, reply)
        i += 1
    if i < len(script):
        raise IllegalMoveError(f"script move {i} comes after the game has ended", i)
    return Verdict(2 if state.p2_wins_final() else 1, list(state.history))


@dataclass
class CheckReport:
    ok: bool
    lines: int
    failures: list

    def to_json(self) -> dict:
        return {"ok": self.ok, "positions_checked": self.lines,
                "failures": [[{"move": m.to_json(), "reply": y} for m, y in line] for line in self.failures]}


def _mirror_ok(strategy: Strategy) -> bool:
    perm = strategy.policy.perm
    d = strategy.space.dist
    n = strategy.space.n
    return (all(d[i][j] == d[perm[i]][perm[j]] for i in range(n) for j in range(n))
            and all(perm[x] == y for x, y in zip(strategy.a, strategy.b)))


def check_strategy(outcome, max_failures: int = 5, memo: dict | None = None) -> CheckReport:
    """Play the strategy against every opponent line (memoized on positions).

    ``memo`` may be shared between checks of strategies that come from the
    same positional policy (same solver or table), whatever their start.
    """
    strategy = _as_strategy(outcome)
    if isinstance(strategy.policy, MirrorPolicy):
        ok = _mirror_ok(strategy)
        return CheckReport(ok, 1, [] if ok else [[]])
    me = strategy.player
    failures: list = []
    memo = {} if memo is None else memo
    tag = (me, strategy.game, id(strategy.policy.solver) if hasattr(strategy.policy, "solver")
           else id(getattr(strategy.policy, "table", strategy.policy)))
    before = len(memo)

    def walk(state) -> bool:
        key = (tag, strategy.policy.node_key(state), state.key())
        hit = memo.get(key)
        if hit is not None:
            return hit
        positional = key[1] is None
        if state.over:
            result = (2 if state.p2_wins_final() else 1) == me
            if not result and len(failures) < max_failures:
                failures.append(list(state.history))
        elif me == 1 and positional and state.broken():
            result = True  # the map is already broken; nothing can repair it
        elif me == 1:
            move = strategy.policy.move(state)
            try:
                state.check_move(move)
            except IllegalMoveError as exc:
                raise StrategyError(f"strategy plays an illegal move: {exc}", line=list(state.history))
            result = True
            for y in range(strategy.space.n):
                if not walk(state.after(move, y)):
                    result = False
                    if len(failures) >= max_failures:
                        break
        else:
            result = True
            for move in state.p1_moves():
                y = strategy.policy.reply(state, move)
                state.check_reply(y)
                if not walk(state.after(move, y)):
                    result = False
                    if len(failures) >= max_failures:
                        break
        memo[key] = result
        return result

    root = strategy.initial_state()
    if strategy.budget == OMEGA_BUDGET and me == 2:
        if strategy.game == "ef":
            raise PreconditionError("exhaustive opposition at budget omega needs a mirror certificate")
        # beyond this budget the approximation game no longer changes
        root.budget = root.solver.omega_cap(0)
    ok = walk(root)
    return CheckReport(ok, len(memo) - before, failures)
