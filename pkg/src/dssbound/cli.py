"""Command-line front end: ``dssbound {bound,tradeoff,dims,verify,export}``.

Exit codes: 0 success, 1 a check failed, 2 bad usage or parameters.
Reports go to stdout (or ``--output``); wall-clock times go to stderr so
that repeated runs write byte-identical files.  Relative ``--output`` paths
are resolved against ``$DSSBOUND_OUTPUT_DIR`` when it is set.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from importlib import resources

import numpy as np

from .entset import render
from .lp import (build_rate_lp, build_tradeoff_lp, export_lp, rational_record, solve,
                 solution_report, verify_certificate)
from .model import CapacityError, DssParams, ParameterError, as_rational, enumerate_universe, \
    max_flow_bound
from .reduce import ClosureOracle, NodePermutation, dense_orbit_table, irreducible_sets
from .verify import (CodeTable, CodeValidationError, check_code, check_theorem4,
                     proposition1_suite)

OUTPUT_DIR_ENV = "DSSBOUND_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- helpers ------------------------------------------------------------------------

def _rational(text):
    try:
        return as_rational(text)
    except ParameterError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_grid(text: str) -> list[Fraction]:
    """``"1/4,1/2,1"`` or ``"lo:hi:count"`` (evenly spaced, both ends included)."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid {text!r}: expected lo:hi:count")
        lo, hi = as_rational(parts[0]), as_rational(parts[1])
        count = int(parts[2])
        if count < 1:
            raise UsageError("grid count must be positive")
        if count == 1:
            return [lo]
        step = (hi - lo) / (count - 1)
        return [lo + step * i for i in range(count)]
    return [as_rational(p) for p in text.split(",") if p.strip()]


def _params(args, alpha=None, beta=None) -> DssParams:
    return DssParams(args.n, args.k, args.d, alpha, beta)


def _emit(args, text: str):
    path = getattr(args, "output", None)
    if not path:
        sys.stdout.write(text)
        return
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _json(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _arithmetic(args):
    if args.arithmetic:
        return args.arithmetic
    return "float" if args.mode == "unreduced" else "exact"


# -- subcommands -----------------------------------------------------------------------

def run_bound(args) -> int:
    params = _params(args, args.alpha, args.beta)
    lp = build_rate_lp(params, args.mode)
    sol = solve(lp, _arithmetic(args), args.engine)
    report = {"command": "bound"}
    report.update(solution_report(lp, sol))
    report["R_LP"] = report.pop("value")
    flow = max_flow_bound(params)
    report["maxflow"] = rational_record(flow)
    if sol.optimal:
        gap = flow - sol.value if isinstance(sol.value, Fraction) else float(flow) - sol.value
        report["gap"] = rational_record(gap)
        tol = 0 if sol.arithmetic == "exact" else 1e-6
        report["certified"] = verify_certificate(lp, sol, tol)
    _emit(args, _json(report))
    return EXIT_OK


def _tradeoff_point(job):
    n, k, d, free, fixed, rate, mode, arithmetic, engine = job
    if free == "alpha":
        params = DssParams(n, k, d, None, fixed)
    else:
        params = DssParams(n, k, d, fixed, None)
    lp = build_tradeoff_lp(params, free, rate, mode)
    sol = solve(lp, arithmetic, engine)
    return sol.status, sol.value


def run_tradeoff(args) -> int:
    grid = parse_grid(args.grid)
    if not grid:
        raise UsageError("empty grid")
    fixed_name = "beta" if args.free == "alpha" else "alpha"
    jobs = [(args.n, args.k, args.d, args.free, g, args.rate, args.mode, _arithmetic(args),
             args.engine) for g in grid]
    _params(args)  # validate n, k, d before fanning out
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_tradeoff_point, jobs))
    else:
        results = [_tradeoff_point(j) for j in jobs]
    rows = []
    for g, (status, value) in zip(grid, results):
        rec = rational_record(value) if value is not None else {"fraction": None, "decimal": None}
        rows.append({
            fixed_name: str(g),
            f"{fixed_name}_decimal": format(float(g), ".12g"),
            args.free: rec["fraction"],
            f"{args.free}_decimal": rec["decimal"],
            "status": status,
        })
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        _emit(args, buf.getvalue())
    else:
        doc = {"command": "tradeoff", "params": _params(args).as_dict(), "free": args.free,
               "rate": str(args.rate), "mode": args.mode, "rows": rows}
        _emit(args, _json(doc))
    return EXIT_OK


def minimal_generators(table: np.ndarray) -> dict:
    """For each closed set, the smallest (by size, then mask) subset closing to it."""
    masks = np.arange(len(table), dtype=np.int64)
    pop = np.zeros(len(table), dtype=np.int64)
    m = masks.copy()
    while m.any():
        pop += m & 1
        m >>= 1
    order = np.lexsort((masks, pop))
    closed, first = np.unique(table[order], return_index=True)
    return {int(c): int(order[f]) for c, f in zip(closed, first)}


def run_dims(args) -> int:
    params = _params(args)
    universe = enumerate_universe(params)
    oracle = ClosureOracle.for_universe(universe)
    maximal, nonmaximal = irreducible_sets(oracle, universe)
    dims = [min(maximal)] + nonmaximal
    table = dense_orbit_table(oracle, universe)
    gens = minimal_generators(oracle.table)
    closed_sets = gens.keys() - {0}
    report = {
        "command": "dims",
        "params": params.as_dict(),
        "universe_size": universe.size,
        "variables": universe.names(),
        "unreduced_columns": (1 << universe.size) - 1,
        "maximal_irreducible": {"count": len(maximal),
                                "sets": [render(universe, a) for a in maximal]},
        "fd_dimensions": {"count": len(dims), "sets": [render(universe, a) for a in dims]},
        "closed_sets": len(closed_sets),
        "orbit_representatives": {
            "count": len(table.reps),
            "sets": [{"generator": render(universe, gens[r]), "closed": render(universe, r)}
                     for r in table.reps],
        },
    }
    _emit(args, _json(report))
    return EXIT_OK


def _default_code():
    ref = resources.files("dssbound") / "data" / "parity_322.json"
    with resources.as_file(ref) as path:
        return CodeTable.load(path)


def run_verify(args) -> int:
    code = CodeTable.load(args.code) if args.code else _default_code()
    if args.trials == 0:
        print("warning: --trials 0, the randomized suite is vacuous", file=sys.stderr)
    suite = proposition1_suite(args.seed, args.trials, args.nodes)
    code_report = check_code(code)
    code_report["storage_bits"] = {str(i): v for i, v in code_report["storage_bits"].items()}
    checks = []
    if code_report["admissible"]:
        n = code.params.n
        first_repair = min(code.repair, key=lambda v: v.sort_key())
        cases = [([1], [], NodePermutation.from_cycles(n, "(1 2)")),
                 ([], [first_repair], NodePermutation.from_cycles(n, f"(1 {n})")),
                 ([1], [first_repair], NodePermutation.identity(n))]
        for gamma, delta, sigma in cases:
            rep = check_theorem4(code, gamma, delta, sigma)
            rep.update({"gamma": gamma, "delta": [str(v) for v in delta], "sigma": str(sigma)})
            checks.append(rep)
    passed = suite["passed"] and code_report["admissible"] and all(c["equal"] for c in checks)
    report = {"command": "verify", "passed": passed, "proposition1": suite,
              "code": code_report, "relabelling_checks": checks}
    _emit(args, _json(report))
    if not code_report["admissible"]:
        for v in code_report["violations"]:
            print(f"violation: {json.dumps(v)}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def run_export(args) -> int:
    if args.free:
        fixed = {"alpha": args.beta, "beta": args.alpha}[args.free]
        if fixed is None:
            raise UsageError(f"--free {args.free} needs the other capacity")
        params = _params(args, args.alpha if args.free == "beta" else None,
                         args.beta if args.free == "alpha" else None)
        lp = build_tradeoff_lp(params, args.free, args.rate, args.mode)
    else:
        if args.alpha is None or args.beta is None:
            raise UsageError("export needs --alpha and --beta (or --free)")
        lp = build_rate_lp(_params(args, args.alpha, args.beta), args.mode)
    _emit(args, export_lp(lp))
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dssbound",
        description="LP outer bounds for exact-repair distributed storage systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    def instance(p):
        p.add_argument("--n", type=int, required=True, help="number of storage nodes")
        p.add_argument("--k", type=int, required=True, help="nodes needed to reconstruct")
        p.add_argument("--d", type=int, required=True, help="helpers per repair")

    def solver(p):
        p.add_argument("--mode", choices=["reduced", "unreduced"], default="reduced")
        p.add_argument("--arithmetic", choices=["exact", "float"], default=None,
                       help="default: exact for reduced, float for unreduced")
        p.add_argument("--engine", choices=["auto", "simplex", "highs"], default="auto")

    def output(p):
        p.add_argument("--output", "-o", help=f"output file (relative to ${OUTPUT_DIR_ENV} if set)")

    p = sub.add_parser("bound", help="rate outer bound at fixed capacities")
    instance(p)
    p.add_argument("--alpha", type=_rational, required=True)
    p.add_argument("--beta", type=_rational, required=True)
    solver(p)
    output(p)
    p.set_defaults(func=run_bound)

    p = sub.add_parser("tradeoff", help="minimise one capacity over a grid of the other")
    instance(p)
    p.add_argument("--free", choices=["alpha", "beta"], default="alpha")
    p.add_argument("--grid", required=True, help="values of the fixed capacity: 'a,b,c' or 'lo:hi:count'")
    p.add_argument("--rate", type=_rational, default=Fraction(1))
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the sweep")
    solver(p)
    output(p)
    p.set_defaults(func=run_tradeoff)

    p = sub.add_parser("dims", help="column counts and representative lists")
    instance(p)
    output(p)
    p.set_defaults(func=run_dims)

    p = sub.add_parser("verify", help="randomized relabelling suite and code checks")
    p.add_argument("--code", help="code table JSON (default: the packaged (3,2,2) parity code)")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--nodes", type=int, default=3, help="base variables in the randomized suite")
    output(p)
    p.set_defaults(func=run_verify)

    p = sub.add_parser("export", help="write an LP in CPLEX LP text format")
    instance(p)
    p.add_argument("--alpha", type=_rational)
    p.add_argument("--beta", type=_rational)
    p.add_argument("--free", choices=["alpha", "beta"])
    p.add_argument("--rate", type=_rational, default=Fraction(1))
    p.add_argument("--mode", choices=["reduced", "unreduced"], default="reduced")
    output(p)
    p.set_defaults(func=run_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "trials", 0) < 0 or getattr(args, "jobs", 1) < 1:
        parser.error("--trials must be >= 0 and --jobs >= 1")
    start = time.perf_counter()
    try:
        code = args.func(args)
    except (ParameterError, CapacityError, CodeValidationError, UsageError) as exc:
        print(f"dssbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"dssbound: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"wall time: {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
