"""Batch acceptance run over the exhaustive corpus, emitting one JSON document.

``python -m scottrank.acceptance --jobs N --out FILE`` runs every check and
writes canonical JSON (sorted keys, no timings), so two runs can be compared
byte for byte.  Work is split per space; results are merged in corpus order
whatever the number of worker processes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from functools import lru_cache
from itertools import permutations
from multiprocessing import Pool

from .analysis import compute_bf_table, distinguishing_strategy
from .corpus import random_rational_spaces, small_metric_spaces
from .fixtures import FIXTURES, SPACE_LINE, SPACE_PATH3, SPACE_SQUARE
from .games import (DEFAULT_FAMILY, ApproxSolver, EFSolver, check_strategy, metric_rank_upper,
                    solve_approx_game, solve_ef_game)
from .metric import build_net_family
from .oracle import BruteRanker, enumerate_autoisometries, exists_autoisometry_mapping
from .ranks import Finite
from .systems import (search_k_system, snap_depth, strategy_to_k_system, system_to_isometry,
                      verify_k_system)

MAX_TUPLE = 2
EF_BUDGETS = range(4)
MAX_FAILURES = 10

NAMES = {
    1: "oracle equivalence",
    2: "EF winner matches rank",
    3: "rank below approximation-game bound",
    4: "infinite rank iff autoisometry",
    5: "approximation systems round trip",
    6: "strategies survive exhaustive opposition",
    7: "named fixtures",
}


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@lru_cache(maxsize=1)
def _corpus():
    return small_metric_spaces(5, (1, 2, 3))


@lru_cache(maxsize=1)
def _homogeneity_corpus():
    return [s for s in FIXTURES.values() if s.n <= 6] + random_rational_spaces(200, max_points=6)


def _pairs(n: int, max_len: int = MAX_TUPLE):
    for p in range(max_len + 1):
        tuples = list(permutations(range(n), p))
        for a in tuples:
            for b in tuples:
                yield a, b


def corpus_worker(idx: int) -> dict:
    """Criteria 1, 2, 3, 5 and 6 for one corpus space, with fresh solvers."""
    space = _corpus()[idx]
    t0 = time.perf_counter()
    table = compute_bf_table(space)
    c1_seconds = time.perf_counter() - t0
    ranker = BruteRanker(space)
    ef = EFSolver(space)
    approx = {f: ApproxSolver(space, f) for f in DEFAULT_FAMILY}
    nets_depth = None
    out = {1: [], 2: [], 3: [], 5: [], 6: []}
    memo: dict = {}
    for a, b in _pairs(space.n):
        t0 = time.perf_counter()
        sr = table.rank(a, b)
        brute = ranker.rank(a, b)
        c1_seconds += time.perf_counter() - t0
        out[1].append((a, b, str(sr), str(brute), sr == brute))

        winners = [solve_ef_game(space, a, b, n, solver=ef).winner for n in EF_BUDGETS]
        ok = all((sr > Finite(n)) == (w == 2) for n, w in zip(EF_BUDGETS, winners))
        out[2].append((a, b, str(sr), winners, ok))

        upper = metric_rank_upper(space, a, b, DEFAULT_FAMILY, solvers=approx)
        out[3].append((a, b, str(sr), str(upper), sr <= upper))

        if nets_depth is None:
            nets_depth = snap_depth(space, build_net_family(space, 0))
        out[5].append(_round_trip(space, a, b, sr, nets_depth, ef))

        checks = []
        if sr.is_finite:
            checks.append(("distinguish", check_strategy(distinguishing_strategy(space, a, b, table), memo=memo)))
        for n in EF_BUDGETS:
            checks.append((f"ef:{n}", check_strategy(solve_ef_game(space, a, b, n, solver=ef), memo=memo)))
            for f in DEFAULT_FAMILY:
                outcome = solve_approx_game(space, a, b, n, f, solver=approx[f])
                checks.append((f"approx:{f}:{n}", check_strategy(outcome, memo=memo)))
        bad = [name for name, rep in checks if not rep.ok]
        out[6].append((a, b, len(checks), bad, not bad))
    return {"records": out, "c1_seconds": c1_seconds}


def _round_trip(space, a, b, sr, depth, ef):
    nets = build_net_family(space, depth)
    if not sr.is_finite:
        strategy = solve_ef_game(space, a, b, "omega", solver=ef).strategy
        verified = []
        system = None
        for k in range(depth + 1):
            system = strategy_to_k_system(space, a, b, nets, strategy, k)
            verified.append(not verify_k_system(space, nets, system))
        iso = system_to_isometry(space, a, b, nets, system)
        ok = all(verified) and iso.certified
        return (a, b, "inf", verified, list(iso.perm), ok)
    exhausted_at = None
    for k in range(depth + 1):
        if not search_k_system(space, a, b, nets, k).found:
            exhausted_at = k
            break
    return (a, b, str(sr), exhausted_at, exhausted_at is not None)


def homogeneity_worker(idx: int) -> list:
    space = _homogeneity_corpus()[idx]
    table = compute_bf_table(space)
    perms = enumerate_autoisometries(space)
    rows = []
    for a, b in _pairs(space.n):
        inf = not table.rank(a, b).is_finite
        auto = any(all(p[x] == y for x, y in zip(a, b)) for p in perms)
        rows.append((a, b, inf, auto, inf == auto))
    return rows


def fixture_checks() -> list:
    from .analysis import scott_rank_pair, scott_rank_space
    from .oracle import brute_scott_rank_pair

    sq = SPACE_SQUARE
    sq_autos = enumerate_autoisometries(sq)
    checks = [
        ("path3 SR((A),(B))", str(scott_rank_pair(SPACE_PATH3, (0,), (1,))),
         str(brute_scott_rank_pair(SPACE_PATH3, (0,), (1,))), "1"),
        ("path3 SR((A),(C))", str(scott_rank_pair(SPACE_PATH3, (0,), (2,))),
         str(brute_scott_rank_pair(SPACE_PATH3, (0,), (2,))), "inf"),
        ("path3 space rank", str(scott_rank_space(SPACE_PATH3).rank),
         str(_brute_space_rank(SPACE_PATH3)), "2"),
        ("square space rank", str(scott_rank_space(sq).rank), str(_brute_space_rank(sq)),
         str(_brute_space_rank(sq))),
        ("line autoisometries", len(enumerate_autoisometries(SPACE_LINE)),
         len(enumerate_autoisometries(SPACE_LINE)), 1),
        ("square autoisometries", len(sq_autos), len(sq_autos), 8),
        ("square singleton pairs", sorted({str(scott_rank_pair(sq, (x,), (y,)))
                                           for x in range(sq.n) for y in range(sq.n)}),
         sorted({"inf" if exists_autoisometry_mapping(sq, (x,), (y,)) else "finite"
                 for x in range(sq.n) for y in range(sq.n)}), ["inf"]),
    ]
    return [(name, got, oracle, want, got == want and oracle == want) for name, got, oracle, want in checks]


def _brute_space_rank(space) -> Finite:
    """Space rank from the oracle alone: sup over tuples of (sup of finite pair ranks) + 1."""
    from .oracle import brute_scott_rank_pair

    # A tuple naming every point has rank 0 or inf, so lengths up to min(n, 3) suffice when n <= 4.
    if space.n > 4:
        raise ValueError("oracle space rank is only exact up to 4 points")
    best = 0
    for p in range(min(space.n, 3) + 1):
        tuples = list(permutations(range(space.n), p))
        for a in tuples:
            for b in tuples:
                r = brute_scott_rank_pair(space, a, b)
                if r.is_finite:
                    best = max(best, r.value)
    return Finite(best + 1)


def _summary(cid: int, records: list) -> dict:
    ok_flags = [r[-1] for r in records]
    failures = [r for r in records if not r[-1]][:MAX_FAILURES]
    blob = _dump([list(r) for r in records])
    return {
        "criterion": cid,
        "name": NAMES[cid],
        "pass": all(ok_flags),
        "checked": len(records),
        "failed": ok_flags.count(False),
        "failures": json.loads(_dump([list(r) for r in failures])),
        "digest": hashlib.sha256(blob.encode()).hexdigest(),
    }


def run_all(jobs: int = 1) -> tuple[dict, dict]:
    """All criteria 1-7.  Returns the canonical document and timing info (kept separate)."""
    corpus = _corpus()
    homo = _homogeneity_corpus()
    t0 = time.perf_counter()
    if jobs > 1:
        with Pool(jobs) as pool:
            per_space = pool.map(corpus_worker, range(len(corpus)), chunksize=1)
            per_homo = pool.map(homogeneity_worker, range(len(homo)), chunksize=1)
    else:
        per_space = [corpus_worker(i) for i in range(len(corpus))]
        per_homo = [homogeneity_worker(i) for i in range(len(homo))]
    records = {c: [] for c in (1, 2, 3, 5, 6)}
    c1_seconds = 0.0
    for i, res in enumerate(per_space):
        c1_seconds += res["c1_seconds"]
        for c, rows in res["records"].items():
            records[c].extend((i, *row) for row in rows)
    records[4] = [(i, *row) for i, rows in enumerate(per_homo) for row in rows]
    records[7] = fixture_checks()
    doc = {
        "corpus": {"spaces": len(corpus), "homogeneity_spaces": len(homo)},
        "criteria": [_summary(c, records[c]) for c in sorted(records)],
    }
    timing = {"total_seconds": time.perf_counter() - t0, "criterion1_seconds": c1_seconds}
    return doc, timing


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="python -m scottrank.acceptance")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--out", help="write the JSON here instead of standard output")
    args = p.parse_args(argv)
    from .cli import jobs_from

    doc, timing = run_all(jobs_from(args.jobs))
    text = _dump(doc) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for c in doc["criteria"]:
        print(f"criterion {c['criterion']} ({c['name']}): {'PASS' if c['pass'] else 'FAIL'} "
              f"[{c['checked']} checked, {c['failed']} failed]", file=sys.stderr)
    print(f"elapsed {timing['total_seconds']:.1f}s, criterion 1 {timing['criterion1_seconds']:.1f}s",
          file=sys.stderr)
    return 0 if all(c["pass"] for c in doc["criteria"]) else 1


if __name__ == "__main__":
    sys.exit(main())
