"""Test corpora: exhaustive small spaces and seeded random rational spaces."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations, permutations, product

import numpy as np

from .metric import MetricSpace, from_coordinates


def _valid_assignments(n: int, values) -> np.ndarray:
    edges = list(combinations(range(n), 2))
    idx = {e: i for i, e in enumerate(edges)}
    grid = np.array(list(product(values, repeat=len(edges))), dtype=np.int64)
    ok = np.ones(len(grid), dtype=bool)
    for i, j, k in combinations(range(n), 3):
        x, y, z = grid[:, idx[i, j]], grid[:, idx[j, k]], grid[:, idx[i, k]]
        ok &= (x <= y + z) & (y <= x + z) & (z <= x + y)
    return grid[ok]


def small_metric_spaces(max_points: int = 5, values=(1, 2, 3)) -> list[MetricSpace]:
    """Every metric space on at most ``max_points`` points with distances in ``values``,
    one representative per relabeling class (the lexicographically least code)."""
    values = tuple(sorted(values))
    base = len(values) + 1
    out = [MetricSpace.from_matrix([[0]], ["p0"])] if max_points >= 1 else []
    for n in range(2, max_points + 1):
        edges = list(combinations(range(n), 2))
        idx = {e: i for i, e in enumerate(edges)}
        grid = _valid_assignments(n, values)
        digits = np.searchsorted(np.array(values), grid) + 1
        # most significant digit first, so integer order is lexicographic order
        weights = base ** np.arange(len(edges) - 1, -1, -1, dtype=np.int64)
        best = None
        for perm in permutations(range(n)):
            cols = [idx[tuple(sorted((perm[i], perm[j])))] for i, j in edges]
            code = digits[:, cols] @ weights
            best = code if best is None else np.minimum(best, code)
        for code in np.unique(best):
            ds = []
            c = int(code)
            for _ in edges:
                ds.append(values[c % base - 1])
                c //= base
            ds.reverse()
            rows = [[0] * n for _ in range(n)]
            for (i, j), v in zip(edges, ds):
                rows[i][j] = rows[j][i] = v
            out.append(MetricSpace.from_matrix(rows, [f"p{i}" for i in range(n)]))
    return out


def random_rational_spaces(count: int = 200, seed: int = 20190610, max_points: int = 6,
                           min_points: int = 2) -> list[MetricSpace]:
    """Seeded mix of rational spaces, biased towards ones with symmetry.

    Three generators rotate: distances drawn from {1, 3/2, 2} (any such
    matrix is a metric), small integer grids under L1, and under L-infinity
    with a random rational scale.
    """
    rng = random.Random(seed)
    out = []
    for k in range(count):
        n = rng.randint(min_points, max_points)
        kind = k % 3
        if kind == 0:
            choices = (Fraction(1), Fraction(3, 2), Fraction(2))
            rows = [[Fraction(0)] * n for _ in range(n)]
            for i, j in combinations(range(n), 2):
                rows[i][j] = rows[j][i] = rng.choice(choices)
            out.append(MetricSpace.from_matrix(rows))
        else:
            scale = Fraction(rng.randint(1, 3), rng.randint(1, 4))
            pts = set()
            while len(pts) < n:
                pts.add((rng.randint(0, 2), rng.randint(0, 2)))
            coords = [(x * scale, y * scale) for x, y in sorted(pts)]
            out.append(from_coordinates(coords, "l1" if kind == 1 else "linf"))
    return out
