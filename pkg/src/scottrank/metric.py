"""Finite metric spaces with exact rational distances.

Everything here is exact: distances are :class:`fractions.Fraction` and
every strict inequality is decided by rational comparison.  Solvers use
:attr:`MetricSpace.idist`, the matrix rescaled to integers by the common
denominator, which preserves every comparison.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from .errors import ParseError, PreconditionError, ValidationError

_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or an integer literal into a reduced Fraction."""
    if isinstance(text, bool):
        raise ParseError(f"not a rational literal: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, Fraction):
        return text
    if not isinstance(text, str):
        raise ParseError(f"rational must be given as a string, got {type(text).__name__}")
    m = _RATIONAL.match(text)
    if not m:
        raise ParseError(f"not a rational literal: {text!r}")
    num, den = m.group(1), m.group(2)
    if den is not None and int(den) == 0:
        raise ParseError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Violation:
    axiom: str  # "diagonal" | "symmetry" | "positivity" | "triangle"
    indices: tuple
    detail: str = ""

    def to_json(self):
        return {"axiom": self.axiom, "indices": list(self.indices), "detail": self.detail}


@dataclass(frozen=True)
class MetricSpace:
    labels: tuple
    dist: tuple  # tuple of tuples of Fraction

    def __post_init__(self):
        n = len(self.labels)
        if len(self.dist) != n or any(len(row) != n for row in self.dist):
            raise ParseError(f"distance matrix must be {n}x{n}")
        if len(set(self.labels)) != n:
            raise ParseError("point labels must be distinct")

    @classmethod
    def from_matrix(cls, rows: Sequence[Sequence], labels: Sequence[str] | None = None,
                    validate: bool = True) -> "MetricSpace":
        rows = tuple(tuple(parse_rational(x) for x in row) for row in rows)
        if labels is None:
            labels = [f"p{i}" for i in range(len(rows))]
        space = cls(tuple(str(x) for x in labels), rows)
        if validate:
            report = validate_metric(space)
            if report:
                v = report[0]
                raise ValidationError(f"{v.axiom} violation at {v.indices}: {v.detail}", v)
        return space

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self):
        return len(self.labels)

    def d(self, i: int, j: int) -> Fraction:
        return self.dist[i][j]

    def index(self, label) -> int:
        if isinstance(label, int):
            if not 0 <= label < self.n:
                raise PreconditionError(f"point index {label} out of range for {self.n} points")
            return label
        try:
            return self.labels.index(label)
        except ValueError:
            raise PreconditionError(f"unknown point label {label!r}") from None

    @cached_property
    def scale(self) -> int:
        """Least common denominator of all distances."""
        den = 1
        for row in self.dist:
            for q in row:
                den = den * q.denominator // math.gcd(den, q.denominator)
        return den

    @cached_property
    def idist(self) -> tuple:
        s = self.scale
        return tuple(tuple(int(q * s) for q in row) for row in self.dist)

    def to_json(self) -> dict:
        return {"labels": list(self.labels),
                "dist": [[format_rational(q) for q in row] for row in self.dist]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def relabel(self, perm: Sequence[int]) -> "MetricSpace":
        """Space whose point ``perm[i]`` is the old point ``i``."""
        inv = [0] * self.n
        for i, p in enumerate(perm):
            inv[p] = i
        rows = tuple(tuple(self.dist[inv[i]][inv[j]] for j in range(self.n)) for i in range(self.n))
        return MetricSpace(tuple(self.labels[inv[i]] for i in range(self.n)), rows)


def parse_metric_space(document) -> MetricSpace:
    """Parse a JSON document (text or already-decoded dict) and validate it."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed JSON: {exc}") from None
    if not isinstance(document, dict) or "dist" not in document:
        raise ParseError('metric space document needs a "dist" matrix')
    rows = document["dist"]
    if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
        raise ParseError('"dist" must be a list of rows')
    labels = document.get("labels")
    if labels is not None and (not isinstance(labels, list) or len(labels) != len(rows)):
        raise ParseError('"labels" must list one name per row')
    return MetricSpace.from_matrix(rows, labels)


def from_coordinates(coords: Iterable[Sequence], norm: str = "l1",
                     labels: Sequence[str] | None = None) -> MetricSpace:
    """Build a space from rational coordinates under the L1 or L-infinity norm."""
    pts = [tuple(parse_rational(c) if isinstance(c, str) else Fraction(c) for c in p) for p in coords]
    if norm == "l1":
        metric = lambda p, q: sum(abs(x - y) for x, y in zip(p, q))
    elif norm in ("linf", "l-inf", "max"):
        metric = lambda p, q: max((abs(x - y) for x, y in zip(p, q)), default=Fraction(0))
    else:
        raise PreconditionError(f"unsupported norm {norm!r} (use l1 or linf)")
    rows = [[metric(p, q) for q in pts] for p in pts]
    return MetricSpace.from_matrix(rows, labels)


def validate_metric(space: MetricSpace) -> list[Violation]:
    """Every violated metric axiom, with witness indices. Empty iff valid."""
    d = space.dist
    n = space.n
    out = []
    for i in range(n):
        if d[i][i] != 0:
            out.append(Violation("diagonal", (i, i), f"d={format_rational(d[i][i])}"))
    for i, j in combinations(range(n), 2):
        if d[i][j] <= 0:
            out.append(Violation("positivity", (i, j), f"d={format_rational(d[i][j])}"))
        if d[j][i] != d[i][j]:
            out.append(Violation("symmetry", (i, j),
                                 f"{format_rational(d[i][j])} != {format_rational(d[j][i])}"))
            if d[j][i] <= 0:
                out.append(Violation("positivity", (j, i), f"d={format_rational(d[j][i])}"))
    for i, k in combinations(range(n), 2):
        for j in range(n):
            if j == i or j == k:
                continue
            if d[i][k] > d[i][j] + d[j][k]:
                out.append(Violation(
                    "triangle", (i, j, k),
                    f"{format_rational(d[i][k])} > {format_rational(d[i][j])} + {format_rational(d[j][k])}"))
    return out


def product_distance(space: MetricSpace, s: Sequence[int], t: Sequence[int]) -> Fraction:
    """Sum of coordinatewise distances between two equal-length tuples."""
    if len(s) != len(t):
        raise PreconditionError(f"tuple lengths differ: {len(s)} vs {len(t)}")
    return sum((space.dist[x][y] for x, y in zip(s, t)), Fraction(0))


def min_distance_gap(space: MetricSpace) -> tuple[Fraction, Fraction]:
    """(least gap between distinct distance values incl. 0, least positive distance)."""
    if space.n < 2:
        raise PreconditionError("need at least 2 points")
    values = sorted({q for row in space.dist for q in row})
    gap = min(b - a for a, b in zip(values, values[1:]))
    return gap, values[1]


@dataclass(frozen=True)
class NetFamily:
    """Nested covering nets; ``nets[n]`` covers the space at radius ``2**-n``.

    Nets past ``terminal_depth`` equal the whole point set and are not stored.
    """

    nets: tuple
    terminal_depth: int
    npoints: int = field(default=0)

    @property
    def depth(self) -> int:
        return len(self.nets) - 1

    @property
    def complete(self) -> bool:
        return self.depth >= self.terminal_depth

    @staticmethod
    def radius(n: int) -> Fraction:
        return Fraction(1, 2 ** n) if n >= 0 else Fraction(2 ** -n)

    def net(self, n: int) -> tuple:
        if n < 0:
            raise PreconditionError("net index must be non-negative")
        if n < len(self.nets):
            return self.nets[n]
        if self.complete:
            return tuple(range(self.npoints))
        raise PreconditionError(f"net family truncated at depth {self.depth}; A_{n} unknown")

    def to_json(self) -> dict:
        return {"nets": [list(a) for a in self.nets], "terminal_depth": self.terminal_depth}

    @classmethod
    def from_json(cls, doc: dict, npoints: int) -> "NetFamily":
        try:
            nets = tuple(tuple(int(i) for i in a) for a in doc["nets"])
            return cls(nets, int(doc["terminal_depth"]), npoints)
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"malformed net family: {exc}") from None


def _covered(space: MetricSpace, centers, r: Fraction) -> list[bool]:
    d = space.dist
    return [any(d[x][z] < r for z in centers) for x in range(space.n)]


def build_net_family(space: MetricSpace, max_depth: int) -> NetFamily:
    """Greedy lowest-index-first nested nets, truncated at ``min(max_depth, terminal)``."""
    if max_depth < 0:
        raise PreconditionError("max_depth must be non-negative")
    nets = []
    current: list[int] = []
    n = 0
    while True:
        r = NetFamily.radius(n)
        while True:
            cov = _covered(space, current, r)
            missing = [x for x in range(space.n) if not cov[x]]
            if not missing:
                break
            current.append(missing[0])
        nets.append(tuple(sorted(current)))
        if len(current) == space.n:
            break
        n += 1
    terminal = len(nets) - 1
    return NetFamily(tuple(nets[: min(max_depth, terminal) + 1]), terminal, space.n)


def is_nested_cover(space: MetricSpace, nets: NetFamily) -> bool:
    for n, a in enumerate(nets.nets):
        if n and not set(nets.nets[n - 1]) <= set(a):
            return False
        if not all(_covered(space, a, NetFamily.radius(n))):
            return False
    return True
