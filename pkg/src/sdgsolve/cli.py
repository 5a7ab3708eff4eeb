"""Command-line front end: ``sdgsolve {solve,check,bounds,gen,decompose}``.

Every invocation prints one JSON document on stdout. Exit codes: 0 success
(or "yes" for a threshold / stability question), 1 "no" (infeasible, below
threshold, deviation found), 2 usage error or malformed input (error JSON on
stderr), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
import warnings

from . import __version__
from .bounds import AUTO, bounds_report
from .dp import NSSearchLimit, solve_dp
from .instances import (
    SEPARATION_SCORING,
    is_three_colorable,
    make_lemma2,
    make_lemma3,
    random_instance,
    random_partial_ktree,
    random_tree,
    random_triangle_covered_graph,
    reduce_3ctcg,
)
from .io import (
    FormatError,
    encode_welfare,
    instance_to_json,
    load_instance,
    load_outcome,
    save_json,
)
from .model import NEG_INF, ContractError, InvalidOutcome
from .oracle import DEFAULT_LIMIT_N, OracleRefused, SolveMode, solve_exact
from .stability import find_ir_deviation, find_ns_deviation
from .treewidth import NiceTreeDecomposition, build_nice_decomposition, validate_decomposition
from .vc import VCRefused, min_vertex_cover, solve_vc

EXIT_OK, EXIT_NO, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
AUTO_VC_LIMIT = 6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _scoring_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"scoring must be comma-separated integers, got {text!r}")


def _cap_arg(text: str):
    if text == "auto":
        return AUTO
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"size cap must be an integer or 'auto', got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("size cap must be at least 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sdgsolve", description="Exact solvers for score-based social distance games.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add_input(sp):
        sp.add_argument("--input", "-i", required=True, help="instance JSON or edge-list file")
        sp.add_argument("--scoring", type=_scoring_arg, help="scoring vector, e.g. 1,1,-1 (overrides the file)")
        sp.add_argument("--open", action="store_true", default=None, help="open scoring (distances past the vector score its last entry)")
        sp.add_argument("--pretty", action="store_true", help="indented output")

    sp = sub.add_parser("solve", help="maximise social welfare")
    add_input(sp)
    sp.add_argument("--mode", default="wf", choices=[m.value for m in SolveMode])
    sp.add_argument("--algo", default="auto", choices=["oracle", "dp", "vc", "auto"])
    sp.add_argument("--size-cap", type=_cap_arg, default=None, help="coalition size cap (dp: default auto)")
    sp.add_argument("--threshold", type=int, help="exit 0 iff the optimum reaches this welfare")
    sp.add_argument("--output", "-o", help="write the best outcome JSON here")
    sp.add_argument("--threads", type=int, default=1, help="worker processes for the oracle")
    sp.add_argument("--limit-n", type=int, default=DEFAULT_LIMIT_N, help="oracle refuses larger instances")
    sp.add_argument("--decomposition", help="nice tree decomposition JSON for dp")
    sp.add_argument("--max-cover", type=int, default=8, help="vc refuses larger vertex covers")

    sp = sub.add_parser("check", help="validate an outcome and look for deviations")
    add_input(sp)
    sp.add_argument("--outcome", required=True)
    sp.add_argument("--stability", default="none", choices=["ir", "ns", "none"])

    sp = sub.add_parser("bounds", help="coalition size and diameter bounds")
    add_input(sp)

    sp = sub.add_parser("decompose", help="build a nice tree decomposition")
    add_input(sp)
    sp.add_argument("--output", "-o")
    sp.add_argument("--exact-limit", type=int, default=12, help="exact width search up to this many agents")

    sp = sub.add_parser("gen", help="generate an instance")
    sp.add_argument("--kind", required=True, choices=["lemma2", "lemma3", "3ctcg", "random", "tree", "ktree"])
    sp.add_argument("--n", type=int, default=8, help="agents (random, tree, ktree)")
    sp.add_argument("--p", type=float, default=0.4, help="edge probability (random, 3ctcg cross edges); keep probability (ktree)")
    sp.add_argument("--k", type=int, default=2, help="treewidth bound for ktree")
    sp.add_argument("--triangles", type=int, default=2, help="triangle count for 3ctcg")
    sp.add_argument("--s1", type=int, default=1, help="score of distance 1 for 3ctcg")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scoring", type=_scoring_arg, default=(1,))
    sp.add_argument("--open", action="store_true")
    sp.add_argument("--connected", action="store_true", help="resample random graphs until connected")
    sp.add_argument("--output", "-o")
    sp.add_argument("--pretty", action="store_true")
    return p


def _emit(data, pretty: bool) -> None:
    print(json.dumps(data, indent=2 if pretty else None))


def _load(args):
    return load_instance(args.input, scoring=args.scoring, open_mode=args.open)


def _solve(args) -> int:
    inst = _load(args)
    mode = SolveMode.parse(args.mode)
    algo = args.algo
    note = None
    if algo == "auto":
        if min_vertex_cover(inst, limit=AUTO_VC_LIMIT) is not None:
            algo = "vc"
        elif not inst.open_mode:
            algo = "dp"
        else:
            algo = "oracle"
    if algo == "oracle":
        cap = args.size_cap if isinstance(args.size_cap, int) else None
        res = solve_exact(inst, mode, limit_n=args.limit_n, size_cap=cap, threads=args.threads)
    elif algo == "vc":
        if args.size_cap is not None:
            raise UsageError("--size-cap applies to dp and oracle only")
        res = solve_vc(inst, mode, max_cover=args.max_cover)
    else:
        td = None
        if args.decomposition:
            with open(args.decomposition) as fh:
                try:
                    td = NiceTreeDecomposition.from_json(json.load(fh))
                except (ValueError, KeyError, TypeError) as exc:
                    raise FormatError(f"bad decomposition: {exc}") from exc
        cap = AUTO if args.size_cap is None else args.size_cap
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = solve_dp(inst, mode, cap, td)
        except NSSearchLimit as exc:
            if args.algo != "auto" or inst.n > args.limit_n:
                raise
            note = f"dp gave up ({exc}); fell back to the oracle"
            res = solve_exact(inst, mode, limit_n=args.limit_n, threads=args.threads)
    out = res.to_json()
    if note:
        out["note"] = note
    code = EXIT_OK if res.best is not None else EXIT_NO
    if args.threshold is not None:
        meets = res.welfare is not NEG_INF and res.welfare >= args.threshold
        out["threshold"] = args.threshold
        out["meets_threshold"] = meets
        code = EXIT_OK if meets else EXIT_NO
    if args.output and res.best is not None:
        save_json(res.best.to_json(), args.output, pretty=True)
    _emit(out, args.pretty)
    return code


def _check(args) -> int:
    inst = _load(args)
    with open(args.outcome) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON: {exc}") from exc
    outcome = load_outcome(inst, args.outcome)
    out = {"valid": True, "coalitions": [list(c) for c in outcome.coalitions], "welfare": encode_welfare(outcome.welfare)}
    code = EXIT_OK
    if isinstance(raw, dict) and "welfare" in raw:
        matches = raw["welfare"] == encode_welfare(outcome.welfare)
        out["recorded_welfare"] = raw["welfare"]
        out["welfare_matches"] = matches
        if not matches:
            code = EXIT_NO
    dev = None
    if args.stability == "ir":
        dev = find_ir_deviation(inst, outcome)
    elif args.stability == "ns":
        dev = find_ns_deviation(inst, outcome)
    out["stability"] = args.stability
    if args.stability != "none":
        out["stable"] = dev is None
        out["deviation"] = None if dev is None else dev.to_json()
        if dev is not None:
            code = EXIT_NO
    _emit(out, args.pretty)
    return code


def _bounds(args) -> int:
    inst = _load(args)
    _emit(bounds_report(inst).to_json(), args.pretty)
    return EXIT_OK


def _decompose(args) -> int:
    inst = _load(args)
    td = build_nice_decomposition(inst, exact_limit=args.exact_limit)
    problems = validate_decomposition(inst, td)
    if problems:
        raise RuntimeError("built decomposition failed validation: " + "; ".join(problems[:3]))
    data = td.to_json()
    if args.output:
        save_json(data, args.output, pretty=True)
    _emit(data, args.pretty)
    return EXIT_OK


def _gen(args) -> int:
    meta = {"kind": args.kind, "seed": args.seed}
    if args.kind in ("lemma2", "lemma3"):
        fx = make_lemma2() if args.kind == "lemma2" else make_lemma3()
        inst = fx.instance
        meta = {"kind": args.kind, "named_agents": fx.named_agents, "expected": fx.expected}
    elif args.kind == "3ctcg":
        n, edges, tris = random_triangle_covered_graph(args.triangles, args.p, args.seed)
        inst, b = reduce_3ctcg(n, edges, tris, s1=args.s1)
        meta.update(
            threshold=b,
            source_edges=[list(e) for e in sorted(edges)],
            triangles=[list(t) for t in tris],
            three_colorable=is_three_colorable(n, edges) if n <= 15 else None,
        )
    elif args.kind == "random":
        inst = random_instance(args.n, args.p, args.seed, args.scoring, args.open, connected=args.connected)
    elif args.kind == "tree":
        inst = random_tree(args.n, args.seed, args.scoring, args.open)
    else:
        inst = random_partial_ktree(args.n, args.k, args.seed, args.p, args.scoring, args.open)
    data = instance_to_json(inst)
    data["meta"] = meta
    if args.output:
        save_json(data, args.output, pretty=True)
    _emit(data, args.pretty)
    return EXIT_OK


_COMMANDS = {"solve": _solve, "check": _check, "bounds": _bounds, "decompose": _decompose, "gen": _gen}


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        return _fail("usage", str(exc), EXIT_USAGE)
    except InvalidOutcome as exc:
        return _fail(
            "invalid-outcome",
            str(exc),
            EXIT_USAGE,
            missing=list(exc.missing),
            duplicated=list(exc.duplicated),
            out_of_range=list(exc.out_of_range),
        )
    except (OracleRefused, VCRefused, NSSearchLimit) as exc:
        return _fail("refused", str(exc), EXIT_USAGE)
    except (FormatError, ContractError, OSError) as exc:
        return _fail("input", str(exc), EXIT_USAGE)
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        return _fail("internal", f"{type(exc).__name__}: {exc}", EXIT_INTERNAL, traceback=traceback.format_exc())


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
