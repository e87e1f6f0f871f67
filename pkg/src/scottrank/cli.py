"""``scottrank`` command line.  Every command prints one JSON document.

Exit codes: 0 on success, 2 for bad input or an unmet precondition
(including a certificate that fails its check), 3 for an internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, games, oracle, systems
from .errors import InternalError, ParseError, ScottError
from .fixtures import FIXTURES
from .metric import MetricSpace, build_net_family, parse_metric_space, validate_metric


class _Fail(Exception):
    """Command ran, but its verdict is negative: print the payload, exit 2."""

    def __init__(self, payload):
        self.payload = payload


def _dump(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _read_json(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: malformed JSON: {exc}") from None


def _space_doc(arg: str):
    if arg is None:
        raise ParseError("--space is required")
    if not Path(arg).exists() and arg in FIXTURES:
        return FIXTURES[arg].to_json()
    return _read_json(arg)


def _space(args) -> MetricSpace:
    return parse_metric_space(_space_doc(args.space))


def _tuple(space: MetricSpace, text: str | None, flag: str) -> tuple:
    if text is None:
        raise ParseError(f"{flag} is required")
    items = [t.strip() for t in text.split(",") if t.strip()]
    return tuple(space.index(int(t)) if t.lstrip("-").isdigit() else space.index(t) for t in items)


def _pair(args, space):
    return _tuple(space, args.a, "--a"), _tuple(space, args.b, "--b")


def _alpha(args):
    if args.alpha is None:
        raise ParseError("--alpha is required")
    return games.budget_from(args.alpha)


def _schedules(args) -> list:
    return [games.Geometric.parse(s) for s in args.f] if args.f else list(games.DEFAULT_FAMILY)


def _schedule(args):
    fs = _schedules(args)
    if len(fs) != 1:
        raise ParseError("give exactly one --f schedule")
    return fs[0]


def _emit(args, doc) -> None:
    if args.emit:
        Path(args.emit).write_text(_dump(doc) + "\n")


def _depth(args) -> int:
    if args.depth is None:
        raise ParseError("--depth is required")
    return args.depth


# --------------------------------------------------------------------------
# commands


def cmd_validate(args):
    doc = _space_doc(args.space)
    try:
        space = MetricSpace.from_matrix(doc["dist"], doc.get("labels"), validate=False)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"metric space document needs a dist matrix: {exc}") from None
    report = validate_metric(space)
    out = {"valid": not report}
    if report:
        out["violations"] = [v.to_json() for v in report]
        raise _Fail(out)
    return out


def cmd_rank(args):
    space = _space(args)
    a, b = _pair(args, space)
    sr = analysis.scott_rank_pair(space, a, b)
    upper = games.metric_rank_upper(space, a, b, _schedules(args))
    return {"sr": str(sr), "r_upper": str(upper), "sr_le_r": sr <= upper}


def cmd_space_rank(args):
    return analysis.scott_rank_space(_space(args)).to_json()


def _check_cert(args, space):
    if not args.cert:
        raise ParseError("--cert is required")
    strategy = games.Strategy.from_json(_read_json(args.cert), space)
    report = games.check_strategy(strategy)
    if not report.ok:
        raise _Fail(report.to_json())
    return report.to_json()


def cmd_ef(args):
    space = _space(args)
    if args.action == "check":
        return _check_cert(args, space)
    if args.action == "replay":
        if not args.cert or not args.script:
            raise ParseError("ef replay needs --cert and --script")
        strategy = games.Strategy.from_json(_read_json(args.cert), space)
        return games.replay_game(strategy, _read_json(args.script)).to_json()
    a, b = _pair(args, space)
    if args.action == "distinguish":
        doc = analysis.distinguishing_strategy(space, a, b).to_json()
        _emit(args, doc)
        return doc
    outcome = games.solve_ef_game(space, a, b, _alpha(args))
    _emit(args, outcome.strategy.to_json())
    return outcome.to_json()


def cmd_game(args):
    space = _space(args)
    if args.action == "check":
        return _check_cert(args, space)
    a, b = _pair(args, space)
    outcome = games.solve_approx_game(space, a, b, _alpha(args), _schedule(args))
    _emit(args, outcome.strategy.to_json())
    return outcome.to_json()


def cmd_cas(args):
    space = _space(args)
    if args.action == "build":
        return build_net_family(space, _depth(args)).to_json()
    if args.action in ("verify", "isometry"):
        if not args.cert:
            raise ParseError(f"cas {args.action} needs --cert")
        system = systems.KSystem.from_json(_read_json(args.cert), space)
        if args.action == "isometry":
            return systems.system_to_isometry(space, system.a, system.b, system.nets, system).to_json()
        violations = systems.verify_k_system(space, system.nets, system)
        out = {"ok": not violations, "violations": violations}
        if violations:
            raise _Fail(out)
        return out
    a, b = _pair(args, space)
    if args.action == "stream":
        strategy = _p2_strategy(args, space, a, b)
        return systems.strategy_stream_isometry(space, a, b, strategy).to_json()
    k = _depth(args)
    nets = build_net_family(space, k)
    if args.action == "search":
        return systems.search_k_system(space, a, b, nets, k).to_json()
    # extract
    system = systems.strategy_to_k_system(space, a, b, nets, _p2_strategy(args, space, a, b), k)
    doc = system.to_json()
    _emit(args, doc)
    return doc


def _p2_strategy(args, space, a, b):
    if args.cert:
        return games.Strategy.from_json(_read_json(args.cert), space)
    outcome = games.solve_ef_game(space, a, b, "omega")
    if outcome.winner != 2:
        raise _Fail({"error": "Player 1 wins the EF game at omega; no Player-2 strategy exists",
                     "certificate": outcome.strategy.to_json()})
    return outcome.strategy


def cmd_auto(args):
    space = _space(args)
    perms = oracle.enumerate_autoisometries(space)
    out = {"count": len(perms), "autoisometries": [list(p) for p in perms]}
    if args.a is not None or args.b is not None:
        a, b = _pair(args, space)
        out["maps_a_to_b"] = any(all(p[x] == y for x, y in zip(a, b)) for p in perms)
    return out


def cmd_oracle(args):
    space = _space(args)
    if args.a is not None or args.b is not None:
        a, b = _pair(args, space)
        return {"a": list(a), "b": list(b), "rank": str(oracle.brute_scott_rank_pair(space, a, b))}
    ranker = oracle.BruteRanker(space)
    pts = range(space.n)
    return {
        "autoisometries": len(oracle.enumerate_autoisometries(space)),
        "pairs": [{"a": [x], "b": [y], "rank": str(ranker.rank((x,), (y,)))} for x in pts for y in pts],
    }


# --------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="metric space JSON file (or a fixture name: path3, square, line)")
    common.add_argument("--a", help="left tuple, comma-separated indices or labels")
    common.add_argument("--b", help="right tuple")
    common.add_argument("--alpha", help="budget: a natural number or omega")
    common.add_argument("--f", action="append", help="schedule geometric:q,r (repeatable for rank)")
    common.add_argument("--depth", type=int, help="net depth k")
    common.add_argument("--cert", help="certificate file to read")
    common.add_argument("--emit", help="also write the certificate to this file")
    common.add_argument("--script", help="JSON list of opponent moves for ef replay")
    common.add_argument("--jobs", type=int, default=None, help="worker processes (default $SCOTT_JOBS or 1)")

    p = argparse.ArgumentParser(prog="scottrank", description="Scott analysis of finite rational metric spaces.")
    sub = p.add_subparsers(dest="command", required=True)
    simple = {
        "validate": (cmd_validate, "check the metric axioms"),
        "rank": (cmd_rank, "pair rank and the approximation-game upper bound"),
        "space-rank": (cmd_space_rank, "Scott rank of the whole space"),
        "auto": (cmd_auto, "list autoisometries"),
        "oracle": (cmd_oracle, "brute-force reference values"),
    }
    for name, (fn, help_) in simple.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
    grouped = {
        "ef": (cmd_ef, ("solve", "check", "distinguish", "replay"), "Ehrenfeucht-Fraisse game"),
        "game": (cmd_game, ("solve", "check"), "approximation game"),
        "cas": (cmd_cas, ("build", "search", "verify", "extract", "isometry", "stream"),
                "compact approximation systems"),
    }
    for name, (fn, actions, help_) in grouped.items():
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("action", choices=actions)
        sp.set_defaults(func=fn)
    return p


def jobs_from(value: int | None) -> int:
    if value is None:
        env = os.environ.get("SCOTT_JOBS")
        try:
            value = int(env) if env else 1
        except ValueError:
            raise ParseError(f"SCOTT_JOBS={env!r} is not an integer") from None
    if value < 1:
        raise ParseError("--jobs must be at least 1")
    return value


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        args.jobs = jobs_from(args.jobs)
        out = args.func(args)
    except _Fail as fail:
        print(_dump(fail.payload))
        return 2
    except ScottError as exc:
        print(_dump({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except InternalError as exc:
        print(_dump({"error": "InternalError", "message": str(exc)}), file=sys.stderr)
        return 3
    except RecursionError:
        print(_dump({"error": "InternalError", "message": "recursion limit reached"}), file=sys.stderr)
        return 3
    print(_dump(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
