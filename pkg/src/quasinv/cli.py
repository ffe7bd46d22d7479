"""Command line entry point: ``quasinv verify``, ``quasinv fuzz``, ``quasinv selftest``."""
from __future__ import annotations

import argparse
import json
import sys

from . import report, scenarios
from .errors import QuasinvError
from .linalg import Tolerance


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--tol-abs", type=float, default=1e-9)
    p.add_argument("--tol-rel", type=float, default=1e-9)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="quasinv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run every registered check on one worked example")
    v.add_argument("--example", required=True, choices=("ex1", "ex2", "ex3", "ex4"))
    v.add_argument("--beta", type=float, default=scenarios.EX2_DEFAULT_BETA, help="ex2 inverse temperature")
    v.add_argument("--lambda", dest="lam", type=float, default=scenarios.EX4_DEFAULT_LAMBDA, help="ex4 weight")
    v.add_argument("--mu", type=float, default=None, help="ex4 weight (default 1 - lambda)")
    v.add_argument("--sites", type=int, default=scenarios.EX3_DEFAULT_SITES, help="ex3 cycle length N")
    v.add_argument("--k-file", default=None, help="ex3 site operators K_i (one matrix or a list)")
    v.add_argument("--dim", type=int, default=scenarios.EX1_DEFAULT_DIM, help="ex1 dimension")
    v.add_argument("--seed", type=int, default=0, help="ex1 random seed")
    _add_common(v)

    f = sub.add_parser("fuzz", help="run every check on random instances")
    f.add_argument("--dim", type=int, required=True)
    f.add_argument("--group", required=True, help="cyclic:N")
    f.add_argument("--trials", type=int, required=True)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--kind", choices=("mixed", *scenarios.FUZZ_KINDS), default="mixed")
    f.add_argument("--jobs", type=int, default=1)
    _add_common(f)

    s = sub.add_parser("selftest", help="check that every in-scope result maps to a check")
    s.add_argument("--format", choices=("json", "text"), default="text")
    return parser


def _scenario(args, tol):
    if args.example == "ex1":
        return scenarios.example1(args.dim, args.seed, tol), args.seed
    if args.example == "ex2":
        return scenarios.example2(args.beta, tol), None
    if args.example == "ex3":
        ks = scenarios.load_k_file(args.k_file, args.sites) if args.k_file else None
        return scenarios.example3(args.sites, ks, tol), None
    return scenarios.example4(args.lam, args.mu, tol), None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        res = report.traceability_selftest()
        if args.format == "json":
            sys.stdout.write(json.dumps(res, sort_keys=True, indent=2) + "\n")
        else:
            sys.stdout.write(f"traceability: {'ok' if res['ok'] else 'FAILED'} "
                             f"({len(report.TRACEABILITY)} results, {len(report.REGISTRY)} checks)\n")
            for key in ("unmapped_results", "unknown_check_ids", "unmapped_checks"):
                for item in res[key]:
                    sys.stdout.write(f"  {key}: {item}\n")
        return 0 if res["ok"] else 1
    try:
        tol = Tolerance(args.tol_abs, args.tol_rel)
        if args.command == "verify":
            scen, seed = _scenario(args, tol)
            rep = report.build_report(scen, tol, seed)
        else:
            order = scenarios.parse_group_spec(args.group)
            rep = report.fuzz(args.dim, order, args.trials, args.seed, args.kind, tol, args.jobs)
    except (QuasinvError, ValueError, OSError) as exc:
        sys.stderr.write(f"quasinv: error: {exc}\n")
        return 2
    sys.stdout.write(report.to_json(rep) if args.format == "json" else report.to_text(rep))
    return 0 if report.report_ok(rep) else 1


if __name__ == "__main__":
    sys.exit(main())
