import heapq
import math

import numpy as np
import pytest

from spoch import _backend
from spoch.cmap import PhaseConcurrentMap
from spoch.graph import WeightedDigraph
from spoch.overlay import OverlayGraph

BACKENDS = _backend.available()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def ref_dijkstra(g: WeightedDigraph, s: int) -> dict[int, int]:
    """Independent textbook Dijkstra over adjacency lists (test oracle)."""
    adj = [g.out_arcs(u) for u in range(g.n)]
    dist = {s: 0}
    done = set()
    heap = [(0, s)]
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        for y, w in adj[x]:
            if d + w < dist.get(y, math.inf):
                dist[y] = d + w
                heapq.heappush(heap, (d + w, y))
    return dist


def digraph(n, arcs):
    """Graph from a list of (u, v, w) triples."""
    if not arcs:
        return WeightedDigraph.from_arcs(n, [], [], [])
    u, v, w = zip(*arcs)
    return WeightedDigraph.from_arcs(n, u, v, w)


class Rig:
    """Overlay plus memo plus scratch for driving kernels step by step."""

    def __init__(self, g, backend, dist_capacity=None):
        self.g = g
        self.k = _backend.get(backend)
        self.backend = backend
        self.ov = OverlayGraph(g, seed=11, backend=backend)
        self.dist = PhaseConcurrentMap(dist_capacity or 4 * max(g.m, 4), seed=5, backend=backend)
        self.scratch = self.k.make_scratch(g.n, 2)

    def local_search(self, S, A, theta=500, prune=True):
        flags = np.zeros(self.g.n, dtype=np.uint8)
        flags[list(A)] = 1
        res = self.k.local_search(self.ov, self.dist, np.asarray(S, dtype=np.int64), flags,
                                  theta, prune, 2, self.scratch)
        new_k, new_v, pr, keys, wps = res
        self.dist.insert_min_many(new_k, new_v)
        self.ov.apply_prunes(pr, keys)
        return wps

    def score(self, A, weights=(1.0, 0.0, 0.0), depth=None):
        P = np.zeros(self.g.n)
        depth = np.zeros(self.g.n, dtype=np.int32) if depth is None else depth
        self.k.score(self.ov, self.dist, np.asarray(A, dtype=np.int64), P, depth, *weights, 2, self.scratch)
        return P

    def contract(self, C, depth=None):
        n = self.g.n
        depth = np.zeros(n, dtype=np.int32) if depth is None else depth
        deg = np.zeros(n, dtype=np.int32)
        nsc = np.zeros(n, dtype=np.int32)
        C = np.asarray(C, dtype=np.int64)
        out = self.k.contract(self.ov, self.dist, C, depth, deg, nsc, 2, self.scratch)
        self.ov.mark_contracted(C)
        self.ov.add_shortcuts(out[6], out[7], out[8])
        return out, deg, nsc


@pytest.fixture
def rig(backend):
    return lambda g, **kw: Rig(g, backend, **kw)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, str] = {}
"""Criterion number -> one-line verdict, filled by tests/test_acceptance.py."""


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[num])
