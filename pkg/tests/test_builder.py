import numpy as np
import pytest

from spoch.builder import BuildConfig, Builder, BuildError, assemble, build, build_sequential, build_with_stats
from spoch.cmap import pack
from spoch.graph import dijkstra_oracle, gen_chain, gen_grid, gen_knn, gen_random
from spoch.query import random_pairs, to_bytes

from conftest import digraph


def all_pairs_ok(g, ch):
    for s in range(g.n):
        want = dijkstra_oracle(g, s)
        for t in range(g.n):
            exp = None if want[t] < 0 else int(want[t])
            assert ch.query(s, t) == exp, (s, t)


def sampled_ok(g, ch, k=300, seed=0):
    for s, t in random_pairs(g.n, k, seed).tolist():
        assert ch.query(s, t) == dijkstra_oracle(g, s, t), (s, t)


# ---------------------------------------------------------------- config

@pytest.mark.parametrize("kw", [
    {"theta": 0}, {"score_weights": (0, 1, 0)}, {"score_weights": (1, float("nan"), 0)},
    {"score_weights": (1, 0)}, {"merge_load_threshold": 0}, {"merge_load_threshold": 1.5},
    {"thread_count": -1}, {"load_samples": 0},
])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        BuildConfig(**kw).validate()


# ---------------------------------------------------------------- build examples

def test_single_vertex(backend):
    res = build_with_stats(digraph(1, []), BuildConfig(backend=backend))
    assert res.ch.edge_count == 0 and len(res.rounds) == 1
    assert res.ch.rank.tolist() == [0]


def test_directed_chain_minimal(backend):
    g = digraph(3, [(0, 1, 1), (1, 2, 1)])
    ch = build(g, BuildConfig(backend=backend))
    s, t, _ = ch.arcs()
    pairs = set(zip(s.tolist(), t.tolist()))
    assert {(0, 1), (1, 2)} <= pairs and len(pairs) <= 3
    assert ch.query(0, 2) == 2 and ch.query(2, 0) is None


def test_rank_follows_level():
    # chain 0-1-2 where 1 was contracted in round 0
    ef = (np.array([1, 1]), np.array([0, 2]), np.array([1, 1]))
    eb = (np.array([1, 1]), np.array([0, 2]), np.array([1, 1]))
    ch = assemble(3, np.array([1, 0, 1]), np.zeros(3), ef, eb, seed=0, theta=1)
    r = ch.rank
    assert r[1] < r[0] and r[1] < r[2]
    assert r.tolist() == [1, 0, 2]


def test_arcs_point_upward_and_unique(backend):
    g = gen_random(200, 900, 30, seed=8)
    ch = build(g, BuildConfig(backend=backend))
    ch.check()
    s, t, _ = ch.arcs()
    assert np.all(ch.rank[s] != ch.rank[t])
    assert len(set(zip(s.tolist(), t.tolist()))) == s.size
    assert sorted(ch.rank.tolist()) == list(range(g.n))


# ---------------------------------------------------------------- local search

def test_local_search_skips_unaffected_sources(rig):
    g = digraph(3, [(0, 1, 1), (1, 2, 1)])
    r = rig(g)
    assert r.local_search([0], A=[2]) == 0
    assert len(r.dist) == 0


def test_local_search_direct_witness(rig):
    g = digraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)])
    r = rig(g)
    assert r.local_search([0], A=[1], theta=1000) == 1
    assert r.dist.lookup(int(pack(0, 2))) == 1


def test_local_search_one_wps_per_source(rig):
    # s=0 feeds two affected vertices; one search covers both pair sets
    g = digraph(5, [(0, 1, 1), (0, 2, 1), (1, 3, 1), (2, 4, 1), (3, 4, 9)])
    r = rig(g)
    assert r.local_search([0, 3, 4], A=[1, 2]) == 1
    assert r.dist.lookup(int(pack(0, 3))) == 2
    assert r.dist.lookup(int(pack(0, 4))) == 2


def test_local_search_prunes(rig):
    g = digraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 5)])
    r = rig(g)
    r.local_search([0], A=[1], prune=True)
    assert r.ov.neighbors_out(0) == {1: 1}
    r2 = rig(g)
    r2.local_search([0], A=[1], prune=False)
    assert r2.ov.neighbors_out(0) == {1: 1, 2: 5}


def test_local_search_theta_cutoff(rig):
    # the only witness is long: with theta=1 the target is never settled
    g = digraph(4, [(0, 1, 1), (1, 2, 1), (0, 3, 1), (3, 2, 1)])
    r = rig(g)
    r.local_search([0], A=[1], theta=1)
    assert r.dist.lookup(int(pack(0, 2))) is None


# ---------------------------------------------------------------- score

def test_score_isolated(rig):
    r = rig(digraph(2, []))
    assert r.score([0])[0] == 0


def test_score_path_no_witness(rig):
    r = rig(digraph(3, [(0, 1, 1), (1, 2, 1)]))
    assert r.score([1])[1] == -1


def test_score_path_with_witness(rig):
    r = rig(digraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]))
    r.local_search([0], A=[1])
    assert r.score([1])[1] == -2


def test_score_weights(rig):
    r = rig(digraph(3, [(0, 1, 1), (1, 2, 1)]))
    depth = np.array([0, 3, 0], dtype=np.int32)
    assert r.score([1], weights=(2.0, 0.5, 1.0), depth=depth)[1] == 2 * -1 + 0.5 * 2 + 3


# ---------------------------------------------------------------- select

def _select(rig, g, P, tiebreak=None):
    r = rig(g)
    live = r.ov.live_vertices().astype(np.int64)
    tb = np.arange(g.n, dtype=np.int64) if tiebreak is None else np.asarray(tiebreak, dtype=np.int64)
    return sorted(r.k.select(r.ov, live, np.asarray(P, dtype=float), tb, 2, r.scratch).tolist())


def test_select_path(rig):
    g = gen_chain(5, 1, seed=0)
    assert _select(rig, g, [1, 0, 2, 0, 3]) == [1, 3]


def test_select_ties_use_tiebreak(rig):
    g = gen_chain(5, 1, seed=0)
    assert _select(rig, g, [0] * 5, tiebreak=[3, 1, 4, 0, 2]) == [1, 3]


def test_select_single(rig):
    assert _select(rig, digraph(1, []), [5]) == [0]


def test_select_one_way_arc_counts(rig):
    # neighbors are the union of in and out arcs
    g = digraph(2, [(0, 1, 1)])
    assert _select(rig, g, [1, 0]) == [1]


# ---------------------------------------------------------------- contract

def test_contract_emits_shortcut(rig):
    r = rig(digraph(3, [(0, 1, 1), (1, 2, 1)]))
    out, deg, nsc = r.contract([1])
    ef = list(zip(*[a.tolist() for a in out[0:3]]))
    eb = list(zip(*[a.tolist() for a in out[3:6]]))
    sc = list(zip(*[a.tolist() for a in out[6:9]]))
    assert ef == [(1, 2, 1)] and eb == [(1, 0, 1)] and sc == [(0, 2, 2)]
    assert out[9].nonzero()[0].tolist() == [0]
    assert r.ov.neighbors_out(0) == {2: 2}
    assert deg[1] == 2 and nsc[1] == 1


def test_contract_witness_blocks_shortcut(rig):
    r = rig(digraph(3, [(0, 1, 1), (1, 2, 1), (0, 2, 1)]))
    r.local_search([0], A=[1])
    out, _, _ = r.contract([1])
    assert out[6].size == 0 and not out[9].any()


def test_contract_shared_neighbor_keeps_min(rig):
    # d=0, x=3: 0->1->3 costs 7, 0->2->3 costs 5
    g = digraph(4, [(0, 1, 3), (1, 3, 4), (0, 2, 2), (2, 3, 3)])
    r = rig(g)
    r.contract([1, 2])
    assert r.ov.sc_out.lookup(int(pack(0, 3))) == 5
    assert r.ov.neighbors_out(0) == {3: 5}


def test_contract_no_self_shortcut(rig):
    r = rig(gen_chain(3, 1, seed=0))
    out, _, _ = r.contract([1])
    assert np.all(out[6] != out[7])
    assert sorted(zip(out[6].tolist(), out[7].tolist())) == [(0, 2), (2, 0)]


def test_contract_updates_depth(rig):
    r = rig(gen_chain(3, 1, seed=0))
    depth = np.array([0, 4, 1], dtype=np.int32)
    r.contract([1], depth=depth)
    assert depth.tolist() == [5, 4, 5]


# ---------------------------------------------------------------- invariants

def test_progress_and_levels(backend):
    g = gen_knn(1500, 4, 32, seed=3, components=2)
    b = Builder(g, BuildConfig(backend=backend, check_invariants=True))
    prev = g.n
    while not b.done:
        rec = b.step()
        assert rec.live == prev and rec.contracted > 0
        prev = b.overlay.live_count
        assert prev < rec.live
    assert np.all(b.level >= 0) and b.level.max() == b.round - 1
    with pytest.raises(BuildError):
        b.step()


def test_postprocess_before_done():
    b = Builder(gen_chain(10))
    b.step()
    with pytest.raises(BuildError):
        b.postprocess()


def test_chain_one_shortcut_per_interior_vertex(backend):
    g = gen_chain(2000, 32, seed=4)
    res = build_with_stats(g, BuildConfig(backend=backend))
    assert res.shortcuts <= 2 * (g.n - 2)
    assert res.ch.edge_count <= 2 * g.m
    spv = res.shortcuts_per_vertex
    interior = res.contract_degree == 2
    # either both directions (one undirected shortcut) or none when a neighbor was witnessed
    assert set(np.unique(spv[interior]).tolist()) <= {0, 2}


@pytest.mark.parametrize("seed", range(6))
def test_random_graphs_exhaustive(backend, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 30))
    g = gen_random(n, int(rng.integers(0, 4 * n)), int(rng.integers(1, 20)), seed=seed,
                   components=1 + seed % 2)
    all_pairs_ok(g, build(g, BuildConfig(backend=backend, theta=int(rng.integers(1, 20)))))


@pytest.mark.parametrize("theta", [1, 3, 500])
def test_theta_robust(backend, theta):
    g = gen_grid(15, 15, 32, seed=2)
    sampled_ok(g, build(g, BuildConfig(theta=theta, backend=backend)))


def test_unit_grid_ties(backend):
    g = gen_grid(12, 12, 1, seed=0)
    sampled_ok(g, build(g, BuildConfig(backend=backend)))


def test_uniform_random_expander_small(backend):
    g = gen_random(400, 1600, 100, seed=6, components=2)
    sampled_ok(g, build(g, BuildConfig(backend=backend)))


def test_score_terms_still_correct(backend):
    g = gen_grid(12, 12, 10, seed=5)
    sampled_ok(g, build(g, BuildConfig(score_weights=(1, 0.5, 2), backend=backend)))


def test_no_prune_correct(backend):
    g = gen_knn(800, 4, 32, seed=9)
    a = build(g, BuildConfig(backend=backend))
    b = build(g, BuildConfig(pruning_enabled=False, backend=backend))
    sampled_ok(g, b)
    assert a.edge_count <= b.edge_count


# ---------------------------------------------------------------- determinism

def test_thread_counts_identical(backend):
    g = gen_grid(25, 25, 32, seed=1)
    blobs = {to_bytes(build(g, BuildConfig(thread_count=t, backend=backend))) for t in (1, 2, 3, 8)}
    assert len(blobs) == 1


def test_eager_and_lazy_merge_identical(backend):
    g = gen_knn(1000, 4, 32, seed=1)
    a = build_with_stats(g, BuildConfig(backend=backend))
    b = build_with_stats(g, BuildConfig(merge_every_round=True, backend=backend))
    assert to_bytes(a.ch) == to_bytes(b.ch)
    assert a.merges < b.merges <= len(b.rounds)


def test_small_memo_still_identical(backend):
    g = gen_grid(20, 20, 32, seed=3)
    a = build_with_stats(g, BuildConfig(backend=backend))
    b = build_with_stats(g, BuildConfig(backend=backend, dist_capacity=64))
    assert b.dist_clears > a.dist_clears
    sampled_ok(g, b.ch)


def test_seed_changes_order():
    g = gen_grid(10, 10, 32, seed=1)
    assert to_bytes(build(g, BuildConfig(seed=1))) != to_bytes(build(g, BuildConfig(seed=2)))


def test_round_records_json():
    import json
    res = build_with_stats(gen_chain(100, seed=1))
    rec = json.loads(res.rounds[0].to_json())
    assert rec["round"] == 0 and rec["live"] == 100 and rec["sources"] >= 0
    assert set(rec["seconds"]) == {"local_search", "score", "select", "contract", "merge"}


# ---------------------------------------------------------------- sequential reference

@pytest.mark.parametrize("seed", range(4))
def test_sequential_reference_correct(seed):
    g = gen_random(25, 80, 10, seed=seed, components=1 + seed % 2)
    all_pairs_ok(g, build_sequential(g))


def test_parallel_matches_sequential_answers(backend):
    g = gen_grid(10, 10, 20, seed=4)
    a = build(g, BuildConfig(backend=backend))
    b = build_sequential(g)
    for s, t in random_pairs(g.n, 300, 1).tolist():
        assert a.query(s, t) == b.query(s, t)
