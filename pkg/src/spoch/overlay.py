"""The overlay graph: residual graph of uncontracted vertices during a build.

Storage is a mutable copy of the input CSR (both directions, with twin
indices linking an out-arc to its in-arc copy) plus two grouped
:class:`~spoch.cmap.PhaseConcurrentMap` instances buffering shortcuts, one
grouped by source and one by target. A CSR arc whose weight is
``DELETED`` is gone. Arcs touching contracted vertices are hidden by the
neighbor iterators and physically dropped at the next merge.

Logically the overlay holds, for each ordered pair of live vertices, the
minimum weight over its surviving CSR arc and buffered shortcut.
"""

from __future__ import annotations

import time

import numpy as np

from . import _backend
from .cmap import PhaseConcurrentMap, pack
from .graph import WeightedDigraph

DELETED = -1
HARD_FILL = 0.75
"""Fraction of slots a shortcut table may reach before a forced merge."""


class ContractViolation(RuntimeError):
    """Operation on a vertex that was already contracted."""


def _twins(out_offsets: np.ndarray, out_targets: np.ndarray, n: int):
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(out_offsets))
    order = np.lexsort((src, out_targets))
    out_twin = np.empty(order.size, dtype=np.int64)
    out_twin[order] = np.arange(order.size, dtype=np.int64)
    return out_twin, order.astype(np.int64)


class OverlayGraph:
    def __init__(self, g: WeightedDigraph, seed: int = 0, shortcut_capacity: int | None = None,
                 backend: str | None = None):
        self.n = g.n
        self._k = _backend.get(backend)
        self._backend = backend
        self.out_off = g.out_offsets.astype(np.int64, copy=True)
        self.out_tgt = g.out_targets.astype(np.int32, copy=True)
        self.out_w = g.out_weights.astype(np.int64, copy=True)
        self.in_off = g.in_offsets.astype(np.int64, copy=True)
        self.in_src = g.in_sources.astype(np.int32, copy=True)
        self.in_w = g.in_weights.astype(np.int64, copy=True)
        self.out_twin, self.in_twin = _twins(self.out_off, self.out_tgt, self.n)
        self.contracted = np.zeros(self.n, dtype=np.uint8)
        self.live_count = self.n
        cap = shortcut_capacity if shortcut_capacity is not None else max(g.m, 1)
        self.sc_out = PhaseConcurrentMap(cap, seed=seed ^ 0x9E3779B97F4A7C15, probe_high=True, backend=backend)
        self.sc_in = PhaseConcurrentMap(cap, seed=seed ^ 0xC2B2AE3D27D4EB4F, probe_high=True, backend=backend)
        self.merges = 0
        self.forced_merges = 0
        self.merge_seconds = 0.0

    # ------------------------------------------------------------ queries
    def _check_live(self, u: int) -> int:
        u = int(u)
        if not 0 <= u < self.n:
            raise IndexError(f"vertex {u} out of range")
        if self.contracted[u]:
            raise ContractViolation(f"vertex {u} is contracted")
        return u

    def neighbors_out(self, u: int) -> dict[int, int]:
        """Live out-neighbors of ``u`` mapped to the minimum arc weight."""
        vs, ws = self._k.neighbors(self, self._check_live(u), True)
        return dict(zip(vs.tolist(), ws.tolist()))

    def neighbors_in(self, u: int) -> dict[int, int]:
        vs, ws = self._k.neighbors(self, self._check_live(u), False)
        return dict(zip(vs.tolist(), ws.tolist()))

    def live_vertices(self) -> np.ndarray:
        return np.flatnonzero(self.contracted == 0)

    def arc_count(self) -> int:
        """Number of logical arcs (distinct live pairs)."""
        return int(sum(len(self.neighbors_out(u)) for u in self.live_vertices().tolist()))

    def to_digraph(self) -> WeightedDigraph:
        """Snapshot of the logical overlay on the original vertex ids (test helper)."""
        src, dst, w = [], [], []
        for u in self.live_vertices().tolist():
            for v, c in self.neighbors_out(u).items():
                src.append(u)
                dst.append(v)
                w.append(c)
        return WeightedDigraph.from_arcs(self.n, src, dst, w)

    # ------------------------------------------------------------ pruning
    def _csr_arc(self, u: int, v: int) -> int:
        lo, hi = int(self.out_off[u]), int(self.out_off[u + 1])
        hits = np.flatnonzero(self.out_tgt[lo:hi] == v)
        for i in hits.tolist():
            if self.out_w[lo + i] != DELETED:
                return lo + i
        return -1

    def prune_arc(self, u: int, v: int, witness_distance: int) -> bool:
        """Remove stored arcs ``(u, v)`` heavier than the known distance.

        Applies to the CSR arc and to a buffered shortcut alike, so the
        outcome does not depend on whether the shortcut was merged yet.
        """
        u = self._check_live(u)
        pruned = False
        i = self._csr_arc(u, int(v))
        if i >= 0 and self.out_w[i] > witness_distance:
            self.apply_prunes(np.array([i], dtype=np.int64), np.empty(0, np.uint64))
            pruned = True
        key = int(pack(u, int(v)))
        w = self.sc_out.lookup(key)
        if w is not None and w > witness_distance:
            self.apply_prunes(np.empty(0, np.int64), np.array([key], dtype=np.uint64))
            pruned = True
        return pruned

    def apply_prunes(self, arcs: np.ndarray, shortcut_keys: np.ndarray, threads: int = 1) -> None:
        """Delete phase: tombstone CSR arcs (both copies) and buffered shortcuts."""
        if arcs.size:
            self.out_w[arcs] = DELETED
            self.in_w[self.out_twin[arcs]] = DELETED
        if shortcut_keys.size:
            k = np.asarray(shortcut_keys, dtype=np.uint64)
            self.sc_out.delete_many(k, threads)
            swapped = (k << np.uint64(32)) | (k >> np.uint64(32))
            self.sc_in.delete_many(swapped, threads)

    # ------------------------------------------------------------ shortcuts
    def add_shortcuts(self, src: np.ndarray, dst: np.ndarray, w: np.ndarray, threads: int = 1) -> None:
        """Insert phase for one round's shortcuts, merging first if the
        buffer would pass ``HARD_FILL``."""
        total = int(src.size)
        if not total:
            return
        budget = max(1, int(self.sc_out.capacity * HARD_FILL))
        start = 0
        while start < total:
            if self.sc_out.used >= budget or self.sc_out.used + (total - start) > budget:
                if self.sc_out.used:
                    self.merge_shortcuts(threads)
                    self.forced_merges += 1
            stop = min(total, start + budget - self.sc_out.used)
            s, d, c = src[start:stop], dst[start:stop], w[start:stop]
            self.sc_out.insert_min_many(pack(s, d), c, threads)
            self.sc_in.insert_min_many(pack(d, s), c, threads)
            start = stop

    def mark_contracted(self, vertices: np.ndarray) -> None:
        self.contracted[vertices] = 1
        self.live_count = int(self.n - np.count_nonzero(self.contracted))

    # ------------------------------------------------------------ merging
    def merge_shortcuts(self, threads: int = 1) -> None:
        """Rebuild the CSR from surviving arcs and buffered shortcuts.

        Arcs touching contracted vertices are dropped and each live pair
        keeps its minimum weight; the shortcut buffers are drained.
        """
        t0 = time.perf_counter()
        (self.out_off, self.out_tgt, self.out_w, self.out_twin,
         self.in_off, self.in_src, self.in_w, self.in_twin) = self._k.merge(self, threads)
        self.sc_out.clear()
        self.sc_in.clear()
        self.merges += 1
        self.merge_seconds += time.perf_counter() - t0

    def maybe_merge(self, rng: np.random.Generator, threshold: float = 0.5,
                    samples: int = 1024, threads: int = 1) -> bool:
        if self.sc_out.used == 0:
            return False
        if self.sc_out.estimate_load(samples, rng) > threshold:
            self.merge_shortcuts(threads)
            return True
        return False
