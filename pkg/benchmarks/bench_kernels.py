"""Time the numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter (the choice is fixed at import
time), so this script re-invokes itself with ``DSSBOUND_DISABLE_NUMBA`` set
or unset and prints one table.  The first call of every stage is a warm-up,
which for numba includes compilation; the reported figure is the best of
the remaining repeats.

    python benchmarks/bench_kernels.py [--n 4 --k 3 --d 3] [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def measure(fn, repeat):
    t0 = time.perf_counter()
    fn()
    warm = time.perf_counter() - t0
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return warm, best


def worker(n, k, d, repeat):
    from dssbound import _kernels
    from dssbound.lp import build_rate_lp
    from dssbound.model import DssParams, enumerate_universe
    from dssbound.reduce import ClosureOracle, dense_orbit_table, reduction_maps
    from dssbound.lp import _dense, _objective_vector, _standard_rows
    from dssbound.simplex import bland_simplex

    params = DssParams(n, k, d, 2, 1)
    universe = enumerate_universe(params)
    oracle = ClosureOracle.for_universe(universe)
    det = [r.determiners for r in oracle.rules]
    dep = [r.determined for r in oracle.rules]
    maps = reduction_maps(universe)
    stages = {
        "closure table": lambda: _kernels.closure_table(universe.size, det, dep),
        "orbit table": lambda: dense_orbit_table(oracle, universe),
        "elemental rewrite": lambda: _kernels.rewrite_rows(
            *_kernels.elemental_terms(universe.size), maps.colmap),
        "reduced LP build": lambda: build_rate_lp(params),
    }
    small = build_rate_lp(DssParams(3, 2, 2, 2, 1))
    rows, b, _ = _standard_rows(small)
    A = _dense(rows, len(small.columns), np.float64)
    b = np.array([float(v) for v in b])
    c = np.array([float(v) for v in _objective_vector(small)[0]])
    stages["float simplex (3,2,2)"] = lambda: bland_simplex(A, b, c, exact=False)
    out = {"backend": _kernels.BACKEND}
    for name, fn in stages.items():
        out[name] = measure(fn, repeat)
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.n, args.k, args.d, args.repeat)
        return
    results = []
    for disable in ("0", "1"):
        env = dict(os.environ, DSSBOUND_DISABLE_NUMBA=disable)
        cmd = [sys.executable, __file__, "--worker", "--n", str(args.n), "--k", str(args.k),
               "--d", str(args.d), "--repeat", str(args.repeat)]
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
        results.append(json.loads(proc.stdout.strip().splitlines()[-1]))
    fast, slow = results
    print(f"(n,k,d) = ({args.n},{args.k},{args.d}); best of {args.repeat}, warm-up in brackets")
    print(f"{'stage':24} {fast['backend']:>20} {slow['backend']:>20} {'speedup':>8}")
    for stage in fast:
        if stage == "backend":
            continue
        (fw, fb), (sw, sb) = fast[stage], slow[stage]
        print(f"{stage:24} {fb:9.3f} s [{fw:6.2f}] {sb:9.3f} s [{sw:6.2f}] {sb / fb:7.1f}x")


if __name__ == "__main__":
    main()
