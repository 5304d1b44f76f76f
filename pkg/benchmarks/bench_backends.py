"""Compare the compiled core with the pure-Python kernels.

Builds the same graphs with both backends, checks that the serialized
hierarchies are byte-identical, and reports build and query timings.

    python benchmarks/bench_backends.py --grid 40 --chain 5000 --queries 200
"""

from __future__ import annotations

import argparse
import json
import time

from spoch import _backend
from spoch.builder import BuildConfig, build_with_stats
from spoch.graph import gen_chain, gen_grid, gen_knn
from spoch.query import random_pairs, to_bytes


def time_queries(ch, pairs, backend: str) -> float:
    from spoch import query as q

    saved = _backend.kernels
    _backend.kernels = _backend.get(backend)
    try:
        ch._local.__dict__.clear()
        t0 = time.perf_counter()
        for s, t in pairs.tolist():
            q.ch_query(ch, s, t)
        return (time.perf_counter() - t0) / len(pairs)
    finally:
        _backend.kernels = saved
        ch._local.__dict__.clear()


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=40, help="side of the square grid")
    ap.add_argument("--chain", type=int, default=5000)
    ap.add_argument("--knn", type=int, default=3000)
    ap.add_argument("--queries", type=int, default=200)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--json", action="store_true", help="print rows as JSON")
    args = ap.parse_args(argv)

    if "cython" not in _backend.available():
        print("compiled core not built; nothing to compare")
        return 1
    graphs = {
        f"grid{args.grid}x{args.grid}": gen_grid(args.grid, args.grid, 32, args.seed),
        f"chain{args.chain}": gen_chain(args.chain, 32, args.seed),
        f"knn{args.knn}": gen_knn(args.knn, 4, 32, args.seed),
    }
    rows = []
    for name, g in graphs.items():
        out = {}
        for be in ("cython", "python"):
            t0 = time.perf_counter()
            res = build_with_stats(g, BuildConfig(thread_count=1, backend=be))
            out[be] = (time.perf_counter() - t0, to_bytes(res.ch), res.ch)
        pairs = random_pairs(g.n, args.queries, args.seed)
        qc = time_queries(out["cython"][2], pairs, "cython")
        qp = time_queries(out["cython"][2], pairs, "python")
        rows.append({
            "graph": name, "n": g.n, "m": g.m,
            "build_cython_s": out["cython"][0], "build_python_s": out["python"][0],
            "build_speedup": out["python"][0] / out["cython"][0],
            "query_cython_us": qc * 1e6, "query_python_us": qp * 1e6, "query_speedup": qp / qc,
            "identical": out["cython"][1] == out["python"][1],
        })
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print(f"{'graph':<16}{'n':>8}{'build cy s':>12}{'build py s':>12}{'x':>8}"
              f"{'query cy us':>13}{'query py us':>13}{'x':>8}  identical")
        for r in rows:
            print(f"{r['graph']:<16}{r['n']:>8}{r['build_cython_s']:>12.3f}{r['build_python_s']:>12.3f}"
                  f"{r['build_speedup']:>8.1f}{r['query_cython_us']:>13.1f}{r['query_python_us']:>13.1f}"
                  f"{r['query_speedup']:>8.1f}  {r['identical']}")
    return 0 if all(r["identical"] for r in rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
