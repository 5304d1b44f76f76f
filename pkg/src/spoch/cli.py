"""Command line front end: ``spoch {build,query,verify,gen,bench}``.

Exit codes: 0 success, 1 verification found mismatches, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import os
import platform
import secrets
import statistics
import sys
import time

import numpy as np

from . import _backend
from .builder import DEFAULT_SEED, BuildConfig, build_with_stats
from .graph import (GraphError, dijkstra_oracle, gen_chain, gen_grid, gen_knn, gen_random,
                    load_graph, save_graph)
from .query import FormatError, batch_query, deserialize, random_pairs, read_pairs, serialize

BENCH_SCHEMA_VERSION = 1


class CliError(Exception):
    """User-facing error; reported on stderr with exit code 2."""


def _seed(text: str) -> int:
    if text == "random":
        return secrets.randbits(63)
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {text!r}") from None


def _weights(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected three comma separated numbers") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected ed,deg,depth")
    return parts  # type: ignore[return-value]


def _thread_list(text: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError("expected a comma separated list of thread counts") from None
    if not vals or min(vals) < 0:
        raise argparse.ArgumentTypeError("thread counts must be >= 0")
    return vals


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("SPOCH_THREADS", "").strip()
    if env:
        try:
            return max(0, int(env))
        except ValueError:
            raise CliError(f"SPOCH_THREADS must be an integer, got {env!r}") from None
    return 0


def _add_build_flags(p: argparse.ArgumentParser, threads: bool = True) -> None:
    d = BuildConfig()
    p.add_argument("--theta", type=int, default=d.theta, help="settle limit of each witness search")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED, help="integer seed, or 'random'")
    if threads:
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads, 0 = all (default: $SPOCH_THREADS or 0)")
    p.add_argument("--score-weights", type=_weights, default=d.score_weights, metavar="ED,DEG,DEPTH")
    p.add_argument("--merge-threshold", type=float, default=d.merge_load_threshold,
                   help="sampled load that triggers a shortcut merge / memo clear")
    p.add_argument("--no-prune", action="store_true", help="disable arc pruning after witness searches")


def _config(args, threads: int) -> BuildConfig:
    return BuildConfig(theta=args.theta, seed=args.seed, score_weights=args.score_weights,
                       merge_load_threshold=args.merge_threshold, thread_count=threads,
                       pruning_enabled=not args.no_prune)


def _load_graph(path):
    if not os.path.exists(path):
        raise CliError(f"no such file: {path}")
    return load_graph(path)


def _load_ch(path):
    if not os.path.exists(path):
        raise CliError(f"no such file: {path}")
    return deserialize(path)


# ---------------------------------------------------------------- subcommands

def cmd_build(args) -> int:
    g = _load_graph(args.input)
    cfg = _config(args, _threads(args))
    res = build_with_stats(g, cfg)
    serialize(res.ch, args.output)
    if args.rounds_json:
        with open(args.rounds_json, "w") as fh:
            for rec in res.rounds:
                fh.write(rec.to_json() + "\n")
    summary = {
        "n": g.n, "m": g.m, "ch_edges": res.ch.edge_count, "shortcuts": res.shortcuts,
        "rounds": len(res.rounds), "build_seconds": round(res.seconds, 6),
        "merges": res.merges, "seed": cfg.seed, "threads": cfg.threads(), "backend": _backend.name,
    }
    summary.update({f"{k}_seconds": round(v, 6) for k, v in res.step_seconds.items()})
    for key, val in summary.items():
        print(f"{key}: {val}")
    return 0


def _pairs(args, n: int) -> np.ndarray:
    if args.pairs_file:
        if not os.path.exists(args.pairs_file):
            raise CliError(f"no such file: {args.pairs_file}")
        return read_pairs(args.pairs_file)
    return random_pairs(n, args.random, args.seed)


def cmd_query(args) -> int:
    ch = _load_ch(args.ch)
    pairs = _pairs(args, ch.n)
    rep = batch_query(ch, pairs)
    if args.pairs_file or args.show:
        for (s, t), d in zip(pairs.tolist(), rep.distances):
            print(f"{s} {t} {'unreachable' if d is None else d}")
    print(f"queries: {rep.count}")
    print(f"mean_us: {rep.mean_us:.3f}")
    print(f"p99_us: {rep.p99_us:.3f}")
    print(f"mean_settled: {rep.mean_settled:.3f}")
    return 0


def cmd_verify(args) -> int:
    g = _load_graph(args.graph)
    ch = _load_ch(args.ch)
    if ch.n != g.n:
        raise CliError(f"vertex counts differ: graph {g.n}, hierarchy {ch.n}")
    if g.n <= args.exhaustive_max:
        checked = mismatches = 0
        first = None
        for s in range(g.n):
            want = dijkstra_oracle(g, s)
            for t in range(g.n):
                got = ch.query(s, t)
                exp = None if want[t] < 0 else int(want[t])
                checked += 1
                if got != exp:
                    mismatches += 1
                    first = first or (s, t, got, exp)
        mode = "exhaustive"
    else:
        rep = batch_query(ch, random_pairs(g.n, args.pairs, args.seed), oracle=g)
        checked, mismatches, first = rep.count, rep.mismatches, rep.first_mismatch
        mode = "sampled"
    print(f"mode: {mode}")
    print(f"pairs_checked: {checked}")
    print(f"mismatches: {mismatches}")
    if first:
        s, t, got, exp = first
        print(f"first_mismatch: s={s} t={t} hierarchy={got} dijkstra={exp}")
        return 1
    return 0


def cmd_gen(args) -> int:
    kind = args.kind
    if kind == "chain":
        g = gen_chain(args.n, args.wmax, args.seed, bidirectional=not args.directed)
    elif kind == "grid":
        g = gen_grid(args.rows, args.cols, args.wmax, args.seed)
    elif kind == "random":
        g = gen_random(args.n, args.m, args.wmax, args.seed, args.components)
    else:
        g = gen_knn(args.n, args.k, args.wmax, args.seed, args.components)
    save_graph(g, args.output)
    print(f"n: {g.n}")
    print(f"m: {g.m}")
    return 0


def cmd_bench(args) -> int:
    g = _load_graph(args.graph)
    if args.repeat < 1:
        raise CliError("--repeat must be >= 1")
    runs, rounds = [], {}
    for t in args.threads:
        cfg = _config(args, t)
        for r in range(args.repeat):
            res = build_with_stats(g, cfg)
            runs.append({
                "threads": cfg.threads(), "requested_threads": t, "repeat": r,
                "seconds": res.seconds, "ch_edges": res.ch.edge_count, "rounds": len(res.rounds),
                "shortcuts": res.shortcuts, "merges": res.merges, "merge_seconds": res.merge_seconds,
                "step_seconds": res.step_seconds,
            })
            if r == 0 and args.rounds:
                rounds[str(t)] = [json.loads(rec.to_json()) for rec in res.rounds]
    med = {}
    for run in runs:
        med.setdefault(run["requested_threads"], []).append(run["seconds"])
    base = statistics.median(med[args.threads[0]])
    speedup = [{"threads": t, "median_seconds": statistics.median(v),
                "speedup": base / statistics.median(v) if statistics.median(v) > 0 else None}
               for t, v in med.items()]
    report = {
        "schema_version": BENCH_SCHEMA_VERSION,
        "graph": {"path": str(args.graph), "n": g.n, "m": g.m},
        "config": {"theta": args.theta, "seed": args.seed, "score_weights": list(args.score_weights),
                   "merge_threshold": args.merge_threshold, "pruning": not args.no_prune},
        "machine": {"backend": _backend.name, "max_threads": _backend.max_threads(),
                    "cpu_count": os.cpu_count(), "python": platform.python_version()},
        "runs": runs,
        "speedup": speedup,
        "per_round": rounds,
    }
    text = json.dumps(report, indent=2)
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


# ---------------------------------------------------------------- parser

def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spoch", description="Parallel contraction hierarchies")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a hierarchy from a graph file")
    p.add_argument("input", help="graph file (.gr DIMACS or .spgr binary)")
    p.add_argument("output", help="hierarchy file (.spch)")
    _add_build_flags(p)
    p.add_argument("--rounds-json", metavar="PATH", help="write one JSON record per round")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="answer distance queries on a hierarchy")
    p.add_argument("ch", help="hierarchy file")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--pairs", dest="pairs_file", metavar="FILE", help="text file of 's t' lines")
    src.add_argument("--random", type=int, default=1000, metavar="K", help="K random pairs (default 1000)")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--show", action="store_true", help="print one 's t distance' row per pair")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="compare hierarchy answers against Dijkstra")
    p.add_argument("graph")
    p.add_argument("ch")
    p.add_argument("--pairs", type=int, default=1000, metavar="K", help="random pairs to check")
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--exhaustive-max", type=int, default=50, metavar="N",
                   help="check all n^2 pairs when n <= N")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a synthetic graph")
    p.add_argument("kind", choices=["chain", "grid", "random", "knn"])
    p.add_argument("output", help="graph file (.gr or .spgr)")
    p.add_argument("--n", type=int, default=1000, help="vertices (chain, random, knn)")
    p.add_argument("--rows", type=int, default=100)
    p.add_argument("--cols", type=int, default=100)
    p.add_argument("--m", type=int, default=4000, help="arcs (random)")
    p.add_argument("--k", type=int, default=4, help="neighbors per vertex (knn)")
    p.add_argument("--components", type=int, default=1)
    p.add_argument("--wmax", type=int, default=32)
    p.add_argument("--seed", type=_seed, default=DEFAULT_SEED)
    p.add_argument("--directed", action="store_true", help="one-way chain")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="time builds across thread counts (JSON report)")
    p.add_argument("graph")
    p.add_argument("--threads", type=_thread_list, default=[1], metavar="LIST", help="e.g. 1,2,4")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--rounds", action="store_true", help="include per-round records")
    p.add_argument("--output", "-o", metavar="PATH")
    _add_build_flags(p, threads=False)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, GraphError, FormatError, OSError, ValueError, IndexError) as exc:
        print(f"spoch {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
