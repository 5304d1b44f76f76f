import numpy as np
import pytest

from spoch.builder import BuildConfig, Builder
from spoch.graph import dijkstra_oracle, gen_grid, gen_knn, gen_random
from spoch.overlay import ContractViolation, OverlayGraph

from conftest import digraph


def ov_of(g, backend, **kw):
    return OverlayGraph(g, seed=3, backend=backend, **kw)


def arr(*xs, dtype=np.int64):
    return np.array(xs, dtype=dtype)


def test_neighbors(backend):
    g = digraph(4, [(0, 1, 5), (0, 2, 3), (3, 0, 2)])
    ov = ov_of(g, backend)
    assert ov.neighbors_out(0) == {1: 5, 2: 3}
    assert ov.neighbors_in(0) == {3: 2}
    assert ov.neighbors_in(1) == {0: 5}
    assert ov.arc_count() == 3


def test_neighbors_hide_contracted(backend):
    g = digraph(3, [(0, 1, 5), (0, 2, 3)])
    ov = ov_of(g, backend)
    ov.mark_contracted(arr(1))
    assert ov.neighbors_out(0) == {2: 3}
    assert ov.live_count == 2
    assert ov.live_vertices().tolist() == [0, 2]
    with pytest.raises(ContractViolation):
        ov.neighbors_out(1)
    with pytest.raises(IndexError):
        ov.neighbors_out(7)


def test_shortcut_min_with_csr(backend):
    g = digraph(3, [(0, 1, 5)])
    ov = ov_of(g, backend)
    ov.add_shortcuts(arr(0, 0), arr(1, 2), arr(3, 9))
    assert ov.neighbors_out(0) == {1: 3, 2: 9}
    assert ov.neighbors_in(2) == {0: 9}
    ov.add_shortcuts(arr(0), arr(1), arr(7))
    assert ov.neighbors_out(0)[1] == 3


def test_prune_csr_arc(backend):
    g = digraph(3, [(0, 1, 10), (0, 2, 3), (2, 1, 3)])
    ov = ov_of(g, backend)
    assert not ov.prune_arc(0, 1, 10)
    assert ov.prune_arc(0, 1, 6)
    assert ov.neighbors_out(0) == {2: 3}
    assert ov.neighbors_in(1) == {2: 3}


def test_prune_buffered_shortcut(backend):
    g = digraph(3, [(0, 2, 1), (2, 1, 1)])
    ov = ov_of(g, backend)
    ov.add_shortcuts(arr(0), arr(1), arr(8))
    assert ov.prune_arc(0, 1, 2)
    assert 1 not in ov.neighbors_out(0)
    assert 0 not in ov.neighbors_in(1)


def test_merge_preserves_logical_graph(backend):
    g = gen_random(60, 300, 20, seed=5)
    ov = ov_of(g, backend)
    rng = np.random.default_rng(1)
    ov.mark_contracted(arr(*rng.choice(60, 10, replace=False)))
    live = ov.live_vertices()
    s = rng.choice(live, 80)
    t = rng.choice(live, 80)
    keep = s != t
    ov.add_shortcuts(s[keep], t[keep], rng.integers(1, 40, keep.sum()))
    before = ov.to_digraph()
    ov.merge_shortcuts()
    assert ov.sc_out.used == 0 and ov.sc_in.used == 0 and ov.merges == 1
    assert ov.to_digraph() == before
    # merged CSR drops contracted endpoints and deleted arcs
    src = np.repeat(np.arange(60), np.diff(ov.out_off))
    assert not np.any(ov.contracted[src]) and not np.any(ov.contracted[ov.out_tgt])
    assert np.all(ov.out_w > 0)


def test_merge_canonical(backend):
    g = gen_random(40, 160, 20, seed=2)
    a, b = ov_of(g, backend), ov_of(g, backend)
    s, t, w = arr(1, 2, 3, 4), arr(5, 6, 7, 8), arr(1, 1, 1, 1)
    a.add_shortcuts(s, t, w)
    b.add_shortcuts(s[::-1], t[::-1], w[::-1])
    a.merge_shortcuts()
    b.merge_shortcuts()
    for name in ("out_off", "out_tgt", "out_w", "in_off", "in_src", "in_w"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_maybe_merge_threshold(backend):
    g = digraph(64, [(i, i + 1, 1) for i in range(63)])
    ov = ov_of(g, backend, shortcut_capacity=64)
    rng = np.random.default_rng(0)
    assert not ov.maybe_merge(rng)
    ov.add_shortcuts(arr(*range(10)), arr(*range(20, 30)), np.ones(10, np.int64))
    assert not ov.maybe_merge(rng, 0.5, 1024)
    ov.add_shortcuts(arr(*range(10, 40)), arr(*range(30, 60)), np.ones(30, np.int64))
    assert ov.maybe_merge(rng, 0.5, 1024)
    assert ov.sc_out.used == 0


def test_forced_merge_on_overflow(backend):
    g = digraph(64, [(i, i + 1, 1) for i in range(63)])
    ov = ov_of(g, backend, shortcut_capacity=16)
    src = np.arange(0, 40, dtype=np.int64)
    dst = src + 5
    ov.add_shortcuts(src, dst, np.full(40, 2, np.int64))
    assert ov.forced_merges >= 1
    for u in range(40):
        assert ov.neighbors_out(u)[u + 5] == 2


def _live_distances_ok(g, ov, rng, pairs=50):
    live = ov.live_vertices()
    if live.size < 2:
        return
    snap = ov.to_digraph()
    for s in rng.choice(live, min(pairs, live.size), replace=False).tolist():
        want = dijkstra_oracle(g, s)
        got = dijkstra_oracle(snap, s)
        assert np.array_equal(want[live], got[live]), f"distance from {s} changed"


@pytest.mark.parametrize("gen", [
    lambda: gen_grid(20, 20, 32, seed=1),
    lambda: gen_knn(800, 4, 32, seed=2, components=2),
    lambda: gen_random(300, 1200, 50, seed=3),
])
@pytest.mark.parametrize("prune", [True, False])
def test_rounds_preserve_live_distances(backend, gen, prune):
    g = gen()
    rng = np.random.default_rng(7)
    b = Builder(g, BuildConfig(theta=20, backend=backend, pruning_enabled=prune, check_invariants=True))
    while not b.done:
        b.step()
        _live_distances_ok(g, b.overlay, rng, pairs=10)
