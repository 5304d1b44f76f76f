import struct
import threading

import numpy as np
import pytest

from spoch import _backend
from spoch.builder import BuildConfig, build
from spoch.graph import bidirectional_dijkstra, dijkstra_oracle, gen_chain, gen_grid, gen_random
from spoch.query import (FormatError, batch_query, deserialize, from_bytes, random_pairs, read_pairs,
                         serialize, to_bytes)

from conftest import digraph


@pytest.fixture
def qk(backend, monkeypatch):
    """Route queries through the selected backend."""
    monkeypatch.setattr(_backend, "kernels", _backend.get(backend))
    return backend


@pytest.fixture(scope="module")
def small():
    g = gen_random(40, 160, 20, seed=3, components=2)
    return g, build(g)


def test_same_vertex(qk, small):
    _, ch = small
    assert ch.query(5, 5) == 0


def test_unreachable(qk):
    g = digraph(2, [])
    ch = build(g)
    assert ch.query(0, 1) is None


def test_out_of_range(small):
    _, ch = small
    with pytest.raises(IndexError):
        ch.query(0, 40)
    with pytest.raises(IndexError):
        ch.query(-1, 0)


def test_chain_1000(qk):
    g = gen_chain(1000, 32, seed=5)
    ch = build(g)
    d = dijkstra_oracle(g, 0)
    for t in (1, 10, 500, 999):
        assert ch.query(0, t) == d[t]
        assert ch.query(t, 0) == dijkstra_oracle(g, t, 0)


def test_exhaustive_small(qk, small):
    g, ch = small
    rep = batch_query(ch, [(s, t) for s in range(g.n) for t in range(g.n)], oracle=g)
    assert rep.mismatches == 0 and rep.first_mismatch is None
    assert rep.count == g.n ** 2


def test_stopping_rule_matches_exhaust(qk):
    g = gen_grid(20, 20, 32, seed=6)
    ch = build(g)
    for s, t in random_pairs(g.n, 200, 2).tolist():
        d1, k1 = ch.query_stats(s, t)
        d2, k2 = ch.query_stats(s, t, exhaust=True)
        assert d1 == d2 and k1 <= k2


def test_settles_fewer_than_bidirectional():
    g = gen_grid(200, 200, 32, seed=1)
    ch = build(g)
    ch_settled = bd_settled = 0
    for s, t in random_pairs(g.n, 30, 4).tolist():
        d, k = ch.query_stats(s, t)
        bd, kb = bidirectional_dijkstra(g, s, t)
        assert d == bd
        ch_settled += k
        bd_settled += kb
    assert ch_settled < bd_settled


def test_threads_share_hierarchy(small):
    g, ch = small
    pairs = random_pairs(g.n, 200, 9).tolist()
    want = [dijkstra_oracle(g, s, t) for s, t in pairs]
    errors = []

    def worker():
        got = [ch.query(s, t) for s, t in pairs]
        if got != want:
            errors.append(got)

    ts = [threading.Thread(target=worker) for _ in range(4)]
    for t in ts:
        t.start()
    for t in ts:
        t.join()
    assert not errors


# ---------------------------------------------------------------- batch

def test_batch_errors(small):
    _, ch = small
    with pytest.raises(ValueError):
        batch_query(ch, [])
    with pytest.raises(IndexError):
        batch_query(ch, [(0, 1), (0, 99)])


def test_batch_repeated_pair(small):
    _, ch = small
    rep = batch_query(ch, [(3, 7)] * 5)
    assert len(set(rep.distances)) == 1
    assert rep.summary()["count"] == 5
    assert rep.p50_us <= rep.p99_us


def test_batch_reports_mismatch(small):
    g, ch = small
    other = gen_random(40, 160, 20, seed=4, components=2)
    rep = batch_query(ch, random_pairs(40, 300, 1), oracle=other)
    assert rep.mismatches > 0 and rep.first_mismatch is not None


def test_read_pairs(tmp_path):
    p = tmp_path / "pairs.txt"
    p.write_text("# header\n0 1\n\n2 3  # tail\n")
    assert read_pairs(p).tolist() == [[0, 1], [2, 3]]
    p.write_text("0 1 2\n")
    with pytest.raises(ValueError, match="line 1"):
        read_pairs(p)


def test_random_pairs_reproducible():
    assert np.array_equal(random_pairs(100, 50, 3), random_pairs(100, 50, 3))


# ---------------------------------------------------------------- file format

def test_roundtrip_single_vertex(tmp_path):
    ch = build(digraph(1, []))
    p = tmp_path / "a.spch"
    serialize(ch, p)
    assert deserialize(p) == ch


def test_roundtrip_preserves_answers(tmp_path, small):
    g, ch = small
    p = tmp_path / "a.spch"
    serialize(ch, p)
    back = deserialize(p)
    assert back == ch
    assert to_bytes(back) == to_bytes(ch)
    for s, t in random_pairs(g.n, 100, 0).tolist():
        assert back.query(s, t) == ch.query(s, t)


def test_header_layout(small):
    _, ch = small
    data = to_bytes(ch)
    assert data[:4] == b"SPCH"
    version, n = struct.unpack_from("<IQ", data, 4)
    assert version == 1 and n == ch.n
    seed, theta = struct.unpack_from("<QI", data, len(data) - 12)
    assert seed == ch.seed and theta == ch.theta


def test_bad_magic(small):
    data = to_bytes(small[1])
    with pytest.raises(FormatError, match="magic"):
        from_bytes(b"NOPE" + data[4:])


def test_bad_version(small):
    data = bytearray(to_bytes(small[1]))
    struct.pack_into("<I", data, 4, 99)
    with pytest.raises(FormatError, match="version"):
        from_bytes(bytes(data))


@pytest.mark.parametrize("cut", [1, 13, 100, 400])
def test_truncated(small, cut):
    data = to_bytes(small[1])
    with pytest.raises(FormatError):
        from_bytes(data[:-cut])


def test_trailing_bytes(small):
    with pytest.raises(FormatError, match="trailing"):
        from_bytes(to_bytes(small[1]) + b"\0")


def test_rank_not_permutation(small):
    _, ch = small
    data = bytearray(to_bytes(ch))
    # overwrite rank[1] with rank[0]
    data[20:24] = data[16:20]
    with pytest.raises(FormatError, match="permutation"):
        from_bytes(bytes(data))


def test_zero_weight_rejected(small):
    _, ch = small
    data = bytearray(to_bytes(ch))
    n = ch.n
    first_arc = 16 + 8 * n + 8 + 8 * (n + 1)
    struct.pack_into("<I", data, first_arc + 4, 0)
    with pytest.raises(FormatError, match="weight"):
        from_bytes(bytes(data))
