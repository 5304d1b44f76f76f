"""Round-based parallel contraction.

Each round runs four barrier-separated steps over the overlay graph:

1. local search: bounded witness searches from the sources ``S`` fill the
   distance memo and prune arcs that a shorter path makes redundant;
2. score: the affected vertices ``A`` get a fresh priority;
3. select: every live vertex whose ``(score, tiebreak)`` is smaller than
   that of all its live neighbors joins ``C`` (an independent set);
4. contract: ``C`` leaves the overlay; needed shortcuts are buffered, the
   neighbors of ``C`` become the next ``A`` and the shortcut sources plus
   their in-neighbors the next ``S``.

Between rounds the shortcut buffer is merged into the CSR and the memo is
cleared once their sampled load passes the threshold.
"""

from __future__ import annotations

import heapq
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _backend
from .cmap import PhaseConcurrentMap
from .graph import WeightedDigraph
from .overlay import HARD_FILL, OverlayGraph
from .query import ContractionHierarchy

DEFAULT_SEED = 0x5EED
STEPS = ("local_search", "score", "select", "contract", "merge")


class BuildError(RuntimeError):
    """Internal invariant failure during a build."""


@dataclass
class BuildConfig:
    theta: int = 500
    seed: int = DEFAULT_SEED
    score_weights: tuple[float, float, float] = (1.0, 0.0, 0.0)
    merge_load_threshold: float = 0.5
    thread_count: int = 0
    """0 means every available thread."""
    pruning_enabled: bool = True
    load_samples: int = 1024
    dist_capacity: int | None = None
    """Memo slots; default is four times the arc count."""
    merge_every_round: bool = False
    check_invariants: bool = False
    backend: str | None = None

    def validate(self) -> "BuildConfig":
        if int(self.theta) < 1:
            raise ValueError("theta must be >= 1")
        w = tuple(float(x) for x in self.score_weights)
        if len(w) != 3 or not all(math.isfinite(x) for x in w):
            raise ValueError("score_weights needs three finite numbers")
        if w[0] <= 0:
            raise ValueError("the edge-difference coefficient must be positive")
        self.score_weights = w
        if not 0.0 < float(self.merge_load_threshold) <= 1.0:
            raise ValueError("merge_load_threshold must lie in (0, 1]")
        if int(self.load_samples) < 1:
            raise ValueError("load_samples must be positive")
        if int(self.thread_count) < 0:
            raise ValueError("thread_count must be >= 0")
        return self

    def threads(self) -> int:
        return int(self.thread_count) or _backend.get(self.backend).max_threads()


@dataclass
class RoundRecord:
    round: int
    live: int
    contracted: int
    affected: int
    sources: int
    wps: int
    shortcuts: int
    pruned: int
    merged: bool
    dist_cleared: bool
    seconds: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class BuildResult:
    ch: ContractionHierarchy
    rounds: list[RoundRecord]
    seconds: float
    step_seconds: dict[str, float]
    shortcuts: int
    merges: int
    forced_merges: int
    merge_seconds: float
    dist_clears: int
    strict_violations: int
    contract_degree: np.ndarray
    """Number of distinct overlay neighbors of each vertex when it was contracted."""
    shortcuts_per_vertex: np.ndarray
    """Directed shortcuts emitted by contracting each vertex."""

    @property
    def edges(self) -> int:
        return self.ch.edge_count


class Builder:
    """One build over one graph; not reentrant.

    Call :meth:`step` to run a single round (handy for tests that inspect
    the overlay in between) or :meth:`run` to build to completion.
    """

    def __init__(self, g: WeightedDigraph, cfg: BuildConfig | None = None):
        self.g = g
        self.cfg = cfg = (cfg or BuildConfig()).validate()
        self.k = _backend.get(cfg.backend)
        self.threads = cfg.threads()
        n, m = g.n, g.m
        self.n = n
        ss = np.random.SeedSequence(int(cfg.seed) & 0xFFFFFFFFFFFFFFFF)
        tb_ss, sc_ss, dist_ss = ss.spawn(3)
        self.rng_merge = np.random.default_rng(sc_ss)
        self.rng_dist = np.random.default_rng(dist_ss)
        self.tiebreak = np.random.default_rng(tb_ss).permutation(n).astype(np.int64)
        seed64 = int(np.random.default_rng(ss).integers(0, 2**63))
        self.overlay = OverlayGraph(g, seed=seed64, shortcut_capacity=max(m, 1), backend=cfg.backend)
        dcap = cfg.dist_capacity if cfg.dist_capacity is not None else 4 * max(m, 1)
        self.dist = PhaseConcurrentMap(dcap, seed=seed64 ^ 0xD1B54A32D192ED03, backend=cfg.backend)
        self.scratch = self.k.make_scratch(n, self.threads)

        self.P = np.zeros(n, dtype=np.float64)
        self.depth = np.zeros(n, dtype=np.int32)
        self.level = np.full(n, -1, dtype=np.int32)
        self.score_at = np.zeros(n, dtype=np.float64)
        self.contract_degree = np.zeros(n, dtype=np.int32)
        self.shortcuts_per_vertex = np.zeros(n, dtype=np.int32)
        self.A = np.arange(n, dtype=np.int64)
        self.S = np.arange(n, dtype=np.int64)
        self.a_flags = np.ones(n, dtype=np.uint8)
        self.round = 0
        self.records: list[RoundRecord] = []
        self.dist_clears = 0
        self.strict_violations = 0
        self.shortcut_total = 0
        self._ef: list[tuple[np.ndarray, ...]] = []
        self._eb: list[tuple[np.ndarray, ...]] = []
        self.step_seconds = dict.fromkeys(STEPS, 0.0)

    @property
    def done(self) -> bool:
        return self.overlay.live_count == 0

    # ---------------------------------------------------------- memo upkeep
    def _memo_insert(self, keys: np.ndarray, vals: np.ndarray) -> None:
        if not keys.size:
            return
        budget = int(self.dist.capacity * HARD_FILL)
        if self.dist.used + keys.size > budget:
            self.dist.clear()
            self.dist_clears += 1
        if keys.size > budget:
            cap = self.dist.capacity
            while keys.size > int(cap * HARD_FILL):
                cap *= 2
            self.dist = PhaseConcurrentMap(cap, seed=self.dist.seed, backend=self.cfg.backend)
        self.dist.insert_min_many(keys, vals, self.threads)

    # ---------------------------------------------------------- one round
    def step(self) -> RoundRecord:
        if self.done:
            raise BuildError("build already finished")
        cfg, k, ov, T = self.cfg, self.k, self.overlay, self.threads
        secs: dict[str, float] = {}
        live_before = ov.live_count

        t0 = time.perf_counter()
        new_k, new_v, pr_arcs, pr_keys, wps = k.local_search(
            ov, self.dist, self.S, self.a_flags, int(cfg.theta), bool(cfg.pruning_enabled), T, self.scratch)
        self._memo_insert(new_k, new_v)
        ov.apply_prunes(pr_arcs, pr_keys, T)
        secs["local_search"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        c_ed, c_deg, c_depth = cfg.score_weights
        k.score(ov, self.dist, self.A, self.P, self.depth, c_ed, c_deg, c_depth, T, self.scratch)
        secs["score"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        live = ov.live_vertices().astype(np.int64)
        C = k.select(ov, live, self.P, self.tiebreak, T, self.scratch)
        if not C.size:
            raise BuildError(f"round {self.round}: empty candidate set with {live.size} live vertices")
        if cfg.check_invariants and not k.check_independent(ov, C, T, self.scratch):
            raise BuildError(f"round {self.round}: candidate set is not independent")
        secs["select"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        (ef_u, ef_v, ef_w, eb_u, eb_v, eb_w, sc_1, sc_2, sc_w, s0, aff, strict) = k.contract(
            ov, self.dist, C, self.depth, self.contract_degree, self.shortcuts_per_vertex, T, self.scratch)
        if strict:
            self.strict_violations += strict
            if cfg.check_invariants:
                raise BuildError(f"round {self.round}: {strict} shortcuts beat a memoized distance")
        self._ef.append((ef_u, ef_v, ef_w))
        self._eb.append((eb_u, eb_v, eb_w))
        self.level[C] = self.round
        self.score_at[C] = self.P[C]
        ov.mark_contracted(C)
        ov.add_shortcuts(sc_1, sc_2, sc_w, T)
        self.shortcut_total += int(sc_1.size)
        self.S = k.in_closure(ov, np.flatnonzero(s0).astype(np.int64), T, self.scratch)
        self.a_flags = aff
        self.A = np.flatnonzero(aff).astype(np.int64)
        secs["contract"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        merges = ov.merges
        if self.done:
            if ov.sc_out.used:
                ov.merge_shortcuts(T)
        elif cfg.merge_every_round:
            if ov.sc_out.used:
                ov.merge_shortcuts(T)
        else:
            ov.maybe_merge(self.rng_merge, cfg.merge_load_threshold, cfg.load_samples, T)
        merged = ov.merges > merges
        cleared = False
        if self.dist.used and self.dist.estimate_load(cfg.load_samples, self.rng_dist) > cfg.merge_load_threshold:
            self.dist.clear()
            self.dist_clears += 1
            cleared = True
        secs["merge"] = time.perf_counter() - t0

        for key, v in secs.items():
            self.step_seconds[key] += v
        rec = RoundRecord(
            round=self.round, live=live_before, contracted=int(C.size), affected=int(self.A.size),
            sources=int(self.S.size), wps=int(wps), shortcuts=int(sc_1.size),
            pruned=int(pr_arcs.size + pr_keys.size), merged=merged, dist_cleared=cleared, seconds=secs)
        self.records.append(rec)
        self.round += 1
        return rec

    def run(self, on_round=None) -> BuildResult:
        """Build to completion; ``on_round(builder, record)`` runs after every round."""
        t0 = time.perf_counter()
        while not self.done:
            rec = self.step()
            if on_round is not None:
                on_round(self, rec)
        ch = self.postprocess()
        ov = self.overlay
        return BuildResult(
            ch=ch, rounds=self.records, seconds=time.perf_counter() - t0,
            step_seconds=dict(self.step_seconds), shortcuts=self.shortcut_total,
            merges=ov.merges, forced_merges=ov.forced_merges, merge_seconds=ov.merge_seconds,
            dist_clears=self.dist_clears, strict_violations=self.strict_violations,
            contract_degree=self.contract_degree, shortcuts_per_vertex=self.shortcuts_per_vertex)

    # ---------------------------------------------------------- postprocess
    def postprocess(self) -> ContractionHierarchy:
        if not self.done:
            raise BuildError("postprocess before every vertex is contracted")
        empty = [np.empty(0, np.int64)] * 3
        ef = [np.concatenate(c) for c in zip(*self._ef)] or empty
        eb = [np.concatenate(c) for c in zip(*self._eb)] or empty
        return assemble(self.n, self.level, self.score_at, ef, eb,
                        seed=self.cfg.seed, theta=self.cfg.theta, score_weights=self.cfg.score_weights)


def assemble(n: int, level: np.ndarray, score: np.ndarray, ef, eb, *, seed: int, theta: int,
             score_weights=(1.0, 0.0, 0.0)) -> ContractionHierarchy:
    """Rank vertices by (level, score, id) and lay out the upward and downward CSRs.

    ``ef`` holds forward arcs ``(u, v, w)`` and ``eb`` backward entries
    ``(u, v, w)`` for an original arc ``v -> u``, both recorded when ``u``
    was contracted.
    """
    ids = np.arange(n, dtype=np.int64)
    order = np.lexsort((ids, score, level))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = ids
    up = _rank_csr(n, rank, *ef)
    down = _rank_csr(n, rank, *eb)
    return ContractionHierarchy(
        n=n, rank=rank, level=np.asarray(level, dtype=np.int64),
        up_offsets=up[0], up_targets=up[1], up_weights=up[2],
        down_offsets=down[0], down_targets=down[1], down_weights=down[2],
        seed=int(seed), theta=int(theta), score_weights=tuple(score_weights))


def _rank_csr(n, rank, u, v, w):
    ru = rank[np.asarray(u, dtype=np.int64)]
    rv = rank[np.asarray(v, dtype=np.int64)]
    w = np.asarray(w, dtype=np.int64)
    if np.any(ru >= rv):
        raise BuildError("hierarchy arc does not point to a higher rank")
    order = np.lexsort((rv, ru))
    ru, rv, w = ru[order], rv[order], w[order]
    off = np.zeros(n + 1, dtype=np.int64)
    if ru.size:
        np.cumsum(np.bincount(ru, minlength=n), out=off[1:])
    return off, rv.astype(np.int32), w


def build(g: WeightedDigraph, cfg: BuildConfig | None = None) -> ContractionHierarchy:
    return Builder(g, cfg).run().ch


def build_with_stats(g: WeightedDigraph, cfg: BuildConfig | None = None, on_round=None) -> BuildResult:
    return Builder(g, cfg).run(on_round)


# ---------------------------------------------------------------- reference

def build_sequential(g: WeightedDigraph, cfg: BuildConfig | None = None) -> ContractionHierarchy:
    """Classic one-vertex-at-a-time contraction, for small graphs.

    Priorities are recomputed lazily with exact (unbounded) witness searches
    that avoid the vertex being contracted. Independent of the round
    machinery, so it serves as a differential reference.
    """
    cfg = (cfg or BuildConfig()).validate()
    n = g.n
    out = [dict(g.out_arcs(u)) for u in range(n)]
    inn = [dict(g.in_arcs(u)) for u in range(n)]
    alive = [True] * n
    depth = [0] * n
    tb = np.random.default_rng(cfg.seed).permutation(n).tolist()
    c_ed, c_deg, c_depth = cfg.score_weights

    def witness(a: int, skip: int, limit: int, targets: set) -> dict:
        best = {a: 0}
        done: dict = {}
        heap = [(0, a)]
        while heap and targets - done.keys():
            d, x = heapq.heappop(heap)
            if x in done:
                continue
            if d > limit:
                break
            done[x] = d
            for y, w in out[x].items():
                if y != skip and alive[y] and d + w < best.get(y, math.inf):
                    best[y] = d + w
                    heapq.heappush(heap, (d + w, y))
        return done

    def needed(u: int) -> list[tuple[int, int, int]]:
        res = []
        outs = {v: w for v, w in out[u].items() if alive[v]}
        for a, wa in inn[u].items():
            if not alive[a]:
                continue
            tg = {b for b in outs if b != a}
            if not tg:
                continue
            found = witness(a, u, wa + max(outs[b] for b in tg), tg)
            for b in tg:
                if found.get(b, math.inf) > wa + outs[b]:
                    res.append((a, b, wa + outs[b]))
        return res

    def priority(u: int) -> float:
        nbrs = {v for v in out[u] if alive[v]} | {v for v in inn[u] if alive[v]}
        return c_ed * (len(needed(u)) - len(nbrs)) + c_deg * len(nbrs) + c_depth * depth[u]

    heap = [(priority(u), tb[u], u) for u in range(n)]
    heapq.heapify(heap)
    level = np.zeros(n, dtype=np.int64)
    score = np.zeros(n, dtype=np.float64)
    ef: list[tuple[int, int, int]] = []
    eb: list[tuple[int, int, int]] = []
    step = 0
    while heap:
        p, t, u = heapq.heappop(heap)
        q = priority(u)
        if heap and (q, t) > heap[0][:2]:
            heapq.heappush(heap, (q, t, u))
            continue
        for a, b, w in needed(u):
            if w < out[a].get(b, math.inf):
                out[a][b] = w
                inn[b][a] = w
        ef.extend((u, v, w) for v, w in out[u].items() if alive[v])
        eb.extend((u, v, w) for v, w in inn[u].items() if alive[v])
        alive[u] = False
        for v in set(out[u]) | set(inn[u]):
            if alive[v]:
                depth[v] = max(depth[v], depth[u] + 1)
        level[u] = step
        score[u] = q
        step += 1

    def cols(rows):
        a = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return a[:, 0], a[:, 1], a[:, 2]

    return assemble(n, level, score, cols(ef), cols(eb), seed=cfg.seed, theta=cfg.theta,
                    score_weights=cfg.score_weights)
