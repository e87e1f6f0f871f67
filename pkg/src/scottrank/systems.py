"""Compact approximation systems over nested nets, and autoisometries built from them.

A ``k``-system is a list of maps ``phi_0 .. phi_k`` with ``phi_n : A_n -> A_n``
satisfying four clauses:

(i)   images stay inside ``A_n``;
(ii)  ``|d(a_i, z) - d(b_i, phi_n z)| < 2^-n``;
(iii) ``|d(y, z) - d(phi_m y, phi_n z)| < 2^-m + 2^-n`` for ``m <= n``;
(iv)  the open balls of radius ``2^-(n-1)`` around the images cover the space
      (radius 2 at ``n = 0``).

All comparisons are exact (integers after a common rescaling).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import InternalError, ParseError, PreconditionError, StrategyError
from .games import LEFT, OMEGA_BUDGET, RIGHT, Move, Strategy, _check_pair
from .metric import MetricSpace, NetFamily, format_rational, min_distance_gap


def _radius(n: int) -> Fraction:
    return NetFamily.radius(n)


def _cover_radius(n: int) -> Fraction:
    return Fraction(2) ** (1 - n)


@dataclass(frozen=True)
class KSystem:
    a: tuple
    b: tuple
    nets: NetFamily
    phi: tuple  # phi[n] = tuple of (z, image) sorted by z

    @property
    def depth(self) -> int:
        return len(self.phi) - 1

    def level(self, n: int) -> dict:
        return dict(self.phi[n])

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "pair": {"a": list(self.a), "b": list(self.b)},
            "phi": [[[z, w] for z, w in level] for level in self.phi],
            "nets": self.nets.to_json(),
        }

    @classmethod
    def from_json(cls, doc: dict, space: MetricSpace) -> "KSystem":
        try:
            a, b = _check_pair(space, doc["pair"]["a"], doc["pair"]["b"])
            nets = NetFamily.from_json(doc["nets"], space.n)
            phi = tuple(tuple(sorted((int(z), int(w)) for z, w in level)) for level in doc["phi"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed system: {exc}") from None
        if "depth" in doc and doc["depth"] != len(phi) - 1:
            raise ParseError("system depth disagrees with the number of levels")
        return cls(a, b, nets, phi)


@dataclass(frozen=True)
class IsometryMap:
    perm: tuple
    distance_preserving: bool
    bijective: bool
    carries_pair: bool

    @property
    def certified(self) -> bool:
        return self.distance_preserving and self.bijective and self.carries_pair

    def to_json(self) -> dict:
        return {"map": list(self.perm), "distance_preserving": self.distance_preserving,
                "bijective": self.bijective, "carries_pair": self.carries_pair}


def certify_map(space: MetricSpace, perm: Sequence[int], a, b) -> IsometryMap:
    d = space.dist
    n = space.n
    perm = tuple(perm)
    preserving = len(perm) == n and all(d[i][j] == d[perm[i]][perm[j]] for i in range(n) for j in range(n))
    bijective = sorted(perm) == list(range(n))
    carries = all(perm[x] == y for x, y in zip(a, b))
    return IsometryMap(perm, preserving, bijective, carries)


# --------------------------------------------------------------------------
# verification


def _violation(clause, indices, lhs, rhs) -> dict:
    return {"clause": clause, "indices": list(indices),
            "lhs": format_rational(lhs), "rhs": format_rational(rhs)}


class _Scaled:
    """Distances and radii as integers, exact for every level up to ``k``."""

    def __init__(self, space: MetricSpace, k: int):
        self.unit = space.scale * 2 ** (k + 1)
        mult = 2 ** (k + 1)
        self.d = [[v * mult for v in row] for row in space.idist]
        self.k = k

    def radius(self, n: int) -> int:
        return self.unit >> n

    def cover(self, n: int) -> int:
        return self.unit * 2 >> n

    def frac(self, v: int) -> Fraction:
        return Fraction(v, self.unit)


def verify_k_system(space: MetricSpace, nets: NetFamily, system: KSystem) -> list[dict]:
    """Every clause violation of ``system``; an empty list means it is a k-system."""
    k = system.depth
    if k < 0:
        raise PreconditionError("a system needs at least one level")
    sc = _Scaled(space, k)
    d = sc.d
    levels = []
    for n in range(k + 1):
        dom = set(nets.net(n))
        phi = system.level(n)
        if set(phi) != dom or len(phi) != len(system.phi[n]):
            raise PreconditionError(f"level {n} is not defined exactly on the net A_{n}")
        levels.append(sorted(phi.items()))
    out = []
    for n, items in enumerate(levels):
        dom = set(nets.net(n))
        r = sc.radius(n)
        for z, w in items:
            if w not in dom:
                out.append({"clause": "i", "indices": [n, z, w], "lhs": str(w), "rhs": "A_n"})
        for i, (x, y) in enumerate(zip(system.a, system.b)):
            for z, w in items:
                diff = abs(d[x][z] - d[y][w])
                if diff >= r:
                    out.append(_violation("ii", (n, i, z), sc.frac(diff), sc.frac(r)))
        for m in range(n + 1):
            bound = sc.radius(m) + r
            for y, wy in levels[m]:
                row_y, row_wy = d[y], d[wy]
                for z, wz in items:
                    diff = abs(row_y[z] - row_wy[wz])
                    if diff >= bound:
                        out.append(_violation("iii", (m, n, y, z), sc.frac(diff), sc.frac(bound)))
        cover = sc.cover(n)
        images = {w for _, w in items}
        for p in range(space.n):
            best = min((d[p][w] for w in images), default=None)
            if best is None or best >= cover:
                out.append(_violation("iv", (n, p), sc.frac(best) if best is not None else Fraction(-1),
                                      sc.frac(cover)))
    return out


# --------------------------------------------------------------------------
# search


@dataclass(frozen=True)
class SearchResult:
    k: int
    system: KSystem | None
    max_depth: int  # deepest level for which some system exists (-1: none)

    @property
    def found(self) -> bool:
        return self.system is not None

    def to_json(self) -> dict:
        return {"k": self.k, "found": self.found, "exhausted": not self.found,
                "max_depth": self.max_depth,
                "system": None if self.system is None else self.system.to_json()}


class _Searcher:
    def __init__(self, space, a, b, nets, k):
        self.space = space
        self.sc = _Scaled(space, k)
        self.d = self.sc.d
        self.a, self.b = a, b
        self.nets = nets
        self._alone: dict = {}

    def _point_ok(self, n, z, w, levels, partial) -> bool:
        d = self.d
        r = self.sc.radius(n)
        for x, y in zip(self.a, self.b):
            if abs(d[x][z] - d[y][w]) >= r:
                return False
        row_z, row_w = d[z], d[w]
        for m, lev in enumerate(levels):
            bound = self.sc.radius(m) + r
            for y, wy in lev:
                if abs(row_z[y] - row_w[wy]) >= bound:
                    return False
        bound = r + r
        for y, wy in partial:
            if abs(row_z[y] - row_w[wy]) >= bound:
                return False
        return True

    def _covers(self, n, images) -> bool:
        cover = self.sc.cover(n)
        d = self.d
        return all(any(d[p][w] < cover for w in images) for p in range(self.space.n))

    def levels_for(self, n, prior):
        """Every valid level ``n`` extending ``prior``, in lexicographic order."""
        dom = sorted(self.nets.net(n))
        partial: list = []

        def rec(i):
            if i == len(dom):
                if self._covers(n, [w for _, w in partial]):
                    yield tuple(partial)
                return
            z = dom[i]
            for w in dom:
                if self._point_ok(n, z, w, prior, partial):
                    partial.append((z, w))
                    yield from rec(i + 1)
                    partial.pop()

        return rec(0)

    def feasible_alone(self, n) -> bool:
        hit = self._alone.get(n)
        if hit is None:
            hit = self._alone[n] = next(iter(self.levels_for(n, [])), None) is not None
        return hit


def search_k_system(space: MetricSpace, a, b, nets: NetFamily, k: int) -> SearchResult:
    """Depth-first search of the tree of systems for the least ``k``-system.

    A level that has no valid map even on its own caps the search; the
    reported ``max_depth`` is the deepest level any system reaches.
    """
    a, b = _check_pair(space, a, b)
    if k < 0:
        raise PreconditionError("k must be non-negative")
    if k > nets.depth and not nets.complete:
        raise PreconditionError(f"nets built to depth {nets.depth} < k = {k}")
    s = _Searcher(space, a, b, nets, k)
    cap = k
    for n in range(k + 1):
        if not s.feasible_alone(n):
            cap = n - 1
            break
    best = [-1]

    def dfs(levels):
        n = len(levels)
        best[0] = max(best[0], n - 1)
        if n > cap:
            return levels
        for lev in s.levels_for(n, levels):
            got = dfs(levels + [lev])
            if got is not None:
                return got
        return None

    found = dfs([]) if cap >= 0 else None
    if found is not None and cap == k:
        return SearchResult(k, KSystem(a, b, nets, tuple(found)), k)
    return SearchResult(k, None, best[0] if cap >= 0 else -1)


# --------------------------------------------------------------------------
# from strategies and to isometries


def _budget_at_least(strategy: Strategy, need: int) -> None:
    if strategy.game != "ef" or strategy.player != 2:
        raise PreconditionError("need a Player-2 strategy for the EF game")
    if strategy.budget != OMEGA_BUDGET and strategy.budget < need:
        raise PreconditionError(f"strategy budget {strategy.budget} is below the required {need}")


def strategy_to_k_system(space: MetricSpace, a, b, nets: NetFamily, p2_strategy: Strategy,
                         k: int) -> KSystem:
    """Run the strategy against ``(L - i, c_i)`` over ``A_k`` and snap the answers into the nets."""
    a, b = _check_pair(space, a, b)
    if (tuple(p2_strategy.a), tuple(p2_strategy.b)) != (a, b):
        raise PreconditionError("strategy was built for a different pair")
    ak = sorted(nets.net(k))
    L = len(ak)
    _budget_at_least(p2_strategy, L + 1)
    d = space.dist
    state = p2_strategy.initial_state()
    if state.budget == OMEGA_BUDGET:
        state.budget = L + 1
    answer = {}
    for i, c in enumerate(ak):
        move = Move(L - i, LEFT, c)
        y = p2_strategy.policy.reply(state, move)
        state = state.after(move, y)
        answer[c] = y
    if not state.p2_wins_final():
        raise StrategyError("strategy lost the enumeration play", line=list(state.history))
    phi = []
    for n in range(k + 1):
        an = sorted(nets.net(n))
        r = _radius(n)
        phi.append(tuple((c, next(z for z in an if d[answer[c]][z] < r)) for c in an))
    system = KSystem(a, b, nets, tuple(phi))
    for v in verify_k_system(space, nets, system):
        if v["clause"] != "iv":
            raise InternalError(f"extracted system violates clause {v['clause']}: {v}")
        # an uncovered point refutes the strategy: play it on the right
        y = v["indices"][1]
        move = Move(0, RIGHT, y)
        reply = p2_strategy.policy.reply(state, move)
        final = state.after(move, reply)
        if final.p2_wins_final():
            raise InternalError("extra round failed to refute a strategy breaking clause iv")
        raise StrategyError("strategy loses the extra round on the right", line=list(final.history))
    return system


def snap_depth(space: MetricSpace, nets: NetFamily) -> int:
    """Least depth past the nets' terminal depth with ``2^(1-n) < gap / 2``."""
    if space.n < 2:
        return nets.terminal_depth
    gap = min_distance_gap(space)[0]
    n = nets.terminal_depth
    while not _cover_radius(n) < gap / 2:
        n += 1
    return n


def system_to_isometry(space: MetricSpace, a, b, nets: NetFamily, system: KSystem) -> IsometryMap:
    a, b = _check_pair(space, a, b)
    need = snap_depth(space, nets)
    if system.depth < need:
        raise PreconditionError(f"system depth {system.depth} is below the snap depth {need}")
    violations = verify_k_system(space, nets, system)
    if violations:
        raise PreconditionError(f"not a valid system: first violation {violations[0]}")
    phi = system.level(need)
    if len(phi) != space.n:
        raise InternalError("net at snap depth does not contain every point")
    d = space.dist
    threshold = min_distance_gap(space)[0] / 2 if space.n > 1 else Fraction(1)
    perm = []
    for x in range(space.n):
        near = [p for p in range(space.n) if d[p][phi[x]] < threshold]
        if len(near) != 1:
            raise InternalError(f"snapping the image of {x} is ambiguous")
        perm.append(near[0])
    iso = certify_map(space, perm, a, b)
    if not iso.certified:
        raise InternalError(f"system at snap depth gave an uncertified map {iso.to_json()}")
    return iso


def strategy_stream_isometry(space: MetricSpace, a, b, p2_strategy: Strategy) -> IsometryMap:
    """Name point ``i`` on the left at move ``2i`` and on the right at ``2i + 1``,
    then read the map off the transcript."""
    a, b = _check_pair(space, a, b)
    if (tuple(p2_strategy.a), tuple(p2_strategy.b)) != (a, b):
        raise PreconditionError("strategy was built for a different pair")
    n = space.n
    _budget_at_least(p2_strategy, 2 * n)
    state = p2_strategy.initial_state()
    if state.budget == OMEGA_BUDGET:
        state.budget = 2 * n
    top = state.budget
    forward: dict = {}
    backward: dict = {}
    for i in range(n):
        for side in (LEFT, RIGHT):
            move = Move(top - 1 - len(state.history), side, i)
            y = p2_strategy.policy.reply(state, move)
            state = state.after(move, y)
            if side == LEFT:
                forward[i] = y
            else:
                backward[i] = y
    if not state.p2_wins_final():
        raise StrategyError("strategy lost the streaming play", line=list(state.history))
    perm = [forward[x] for x in range(n)]
    if any(perm[backward[y]] != y for y in range(n)):
        raise InternalError("left and right halves of the streaming play disagree")
    iso = certify_map(space, perm, a, b)
    if not iso.certified:
        raise InternalError(f"streamed map is not a certified autoisometry: {iso.to_json()}")
    return iso
