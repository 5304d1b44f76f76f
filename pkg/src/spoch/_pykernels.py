"""Pure-Python kernels: the fallback twin of the compiled core.

Every function mirrors the signature and the observable results of its
counterpart in ``_core.pyx``; ``threads`` and scratch arguments are accepted
and ignored. Hash tables are shared numpy arrays, so both backends produce
the same slot occupancy and therefore the same load estimates.
"""

from __future__ import annotations

import heapq

import numpy as np

EMPTY = np.uint64(0xFFFFFFFFFFFFFFFF)
TOMBSTONE = np.uint64(0xFFFFFFFFFFFFFFFE)
VALUE_MAX = np.iinfo(np.int64).max

_M64 = 0xFFFFFFFFFFFFFFFF
_EMPTY = 0xFFFFFFFFFFFFFFFF
_TOMB = 0xFFFFFFFFFFFFFFFE
_LO = 0xFFFFFFFF


def mix64(x: int) -> int:
    x &= _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    x ^= x >> 31
    return x


def home_slot(probe: int, seed: int, mask: int) -> int:
    return mix64(probe ^ seed) & mask


def max_threads() -> int:
    return 1


def make_scratch(n: int, threads: int):
    return None


def make_query_scratch(n: int):
    return None


# ------------------------------------------------------------------ tables

class _Table:
    """List snapshot of a map for a lookup phase."""

    __slots__ = ("keys", "vals", "mask", "seed", "high")

    def __init__(self, m):
        self.keys = m.keys.tolist()
        self.vals = m.vals.tolist()
        self.mask = len(self.keys) - 1
        self.seed = m.seed
        self.high = m.probe_high

    def lookup(self, key: int) -> int:
        keys, mask = self.keys, self.mask
        i = start = mix64(((key >> 32) if self.high else key) ^ self.seed) & mask
        while True:
            k = keys[i]
            if k == key:
                return self.vals[i]
            if k == _EMPTY:
                return -1
            i = (i + 1) & mask
            if i == start:
                return -1

    def group(self, g: int):
        keys, vals, mask = self.keys, self.vals, self.mask
        i = start = mix64(g ^ self.seed) & mask
        while True:
            k = keys[i]
            if k == _EMPTY:
                return
            if k != _TOMB and (k >> 32) == g:
                yield k & _LO, vals[i]
            i = (i + 1) & mask
            if i == start:
                return


def map_insert_min(keys, vals, seed, probe_high, qk, qv, threads=1):
    kl = keys.tolist()
    vl = vals.tolist()
    mask = len(kl) - 1
    claimed = failed = 0
    for key, v in zip(qk.tolist(), qv.tolist()):
        i = start = mix64(((key >> 32) if probe_high else key) ^ seed) & mask
        while True:
            k = kl[i]
            if k == _EMPTY:
                kl[i] = key
                vl[i] = min(vl[i], v)
                claimed += 1
                break
            if k == key:
                vl[i] = min(vl[i], v)
                break
            i = (i + 1) & mask
            if i == start:
                failed += 1
                break
    keys[:] = np.array(kl, dtype=np.uint64)
    vals[:] = np.array(vl, dtype=np.int64)
    return claimed, failed


def map_lookup(keys, vals, seed, probe_high, qk, threads=1):
    t = _Table.__new__(_Table)
    t.keys, t.vals, t.mask, t.seed, t.high = keys.tolist(), vals.tolist(), keys.shape[0] - 1, seed, probe_high
    return np.array([t.lookup(k) for k in qk.tolist()], dtype=np.int64)


def map_delete(keys, vals, seed, probe_high, qk, threads=1):
    mask = keys.shape[0] - 1
    deleted = 0
    for key in qk.tolist():
        i = start = mix64(((key >> 32) if probe_high else key) ^ seed) & mask
        while True:
            k = int(keys[i])
            if k == key:
                keys[i] = TOMBSTONE
                deleted += 1
                break
            if k == _EMPTY:
                break
            i = (i + 1) & mask
            if i == start:
                break
    return deleted


def map_probe_group(keys, vals, seed, group):
    t = _Table.__new__(_Table)
    t.keys, t.vals, t.mask, t.seed, t.high = keys.tolist(), vals.tolist(), keys.shape[0] - 1, seed, True
    found = list(t.group(group))
    return (np.array([f[0] for f in found], dtype=np.int64),
            np.array([f[1] for f in found], dtype=np.int64))


# ------------------------------------------------------------------ overlay view

class _View:
    """List snapshot of an overlay for the duration of one kernel call."""

    def __init__(self, ov):
        self.n = ov.n
        self.out_off = ov.out_off.tolist()
        self.out_tgt = ov.out_tgt.tolist()
        self.out_w = ov.out_w.tolist()
        self.in_off = ov.in_off.tolist()
        self.in_src = ov.in_src.tolist()
        self.in_w = ov.in_w.tolist()
        self.dead = ov.contracted.tolist()
        self.sc_out = _Table(ov.sc_out)
        self.sc_in = _Table(ov.sc_in)

    def out_arcs(self, u):
        dead = self.dead
        ws, ts = self.out_w, self.out_tgt
        for i in range(self.out_off[u], self.out_off[u + 1]):
            w = ws[i]
            if w >= 0 and not dead[ts[i]]:
                yield ts[i], w
        for v, w in self.sc_out.group(u):
            if not dead[v]:
                yield v, w

    def in_arcs(self, u):
        dead = self.dead
        ws, ss = self.in_w, self.in_src
        for i in range(self.in_off[u], self.in_off[u + 1]):
            w = ws[i]
            if w >= 0 and not dead[ss[i]]:
                yield ss[i], w
        for v, w in self.sc_in.group(u):
            if not dead[v]:
                yield v, w

    def out_nbrs(self, u) -> dict:
        d: dict = {}
        for v, w in self.out_arcs(u):
            if w < d.get(v, VALUE_MAX):
                d[v] = w
        return d

    def in_nbrs(self, u) -> dict:
        d: dict = {}
        for v, w in self.in_arcs(u):
            if w < d.get(v, VALUE_MAX):
                d[v] = w
        return d


def neighbors(ov, u, out):
    view = _View(ov)
    d = view.out_nbrs(u) if out else view.in_nbrs(u)
    vs = sorted(d)
    return np.array(vs, dtype=np.int64), np.array([d[v] for v in vs], dtype=np.int64)


# ------------------------------------------------------------------ build steps

def local_search(ov, dist, S, a_flags, theta, prune, threads=1, scratch=None):
    view = _View(ov)
    memo = _Table(dist)
    aff = a_flags.tolist()
    new_k: list[int] = []
    new_v: list[int] = []
    pr_arcs: list[int] = []
    del_keys: list[int] = []
    wps = 0
    for s in S.tolist():
        targets = set()
        for u in view.out_nbrs(s):
            if not aff[u]:
                continue
            for v in view.out_nbrs(u):
                if v != s and v not in targets and memo.lookup((s << 32) | v) < 0:
                    targets.add(v)
        found: dict[int, int] = {}
        if targets:
            wps += 1
            remaining = len(targets)
            best = {s: 0}
            settled = set()
            heap = [(0, s)]
            while heap:
                d, x = heapq.heappop(heap)
                if x in settled or d != best[x]:
                    continue
                settled.add(x)
                if x in targets:
                    found[x] = d
                    new_k.append((s << 32) | x)
                    new_v.append(d)
                    remaining -= 1
                if remaining == 0 or len(settled) >= theta:
                    break
                for y, w in view.out_arcs(x):
                    nd = d + w
                    if nd < best.get(y, VALUE_MAX):
                        best[y] = nd
                        heapq.heappush(heap, (nd, y))
        if prune:
            dead = view.dead
            for i in range(view.out_off[s], view.out_off[s + 1]):
                w, v = view.out_w[i], view.out_tgt[i]
                if w < 0 or dead[v]:
                    continue
                d = found[v] if v in found else memo.lookup((s << 32) | v)
                if 0 <= d < w:
                    pr_arcs.append(i)
            for v, w in view.sc_out.group(s):
                if dead[v]:
                    continue
                d = found[v] if v in found else memo.lookup((s << 32) | v)
                if 0 <= d < w:
                    del_keys.append((s << 32) | v)
    return (np.array(new_k, dtype=np.uint64), np.array(new_v, dtype=np.int64),
            np.array(pr_arcs, dtype=np.int64), np.array(del_keys, dtype=np.uint64), wps)


def score(ov, dist, A, P, depth, c_ed, c_deg, c_depth, threads=1, scratch=None):
    view = _View(ov)
    memo = _Table(dist)
    for u in A.tolist():
        outs = view.out_nbrs(u)
        ins = view.in_nbrs(u)
        nb = len(outs) + sum(1 for v in ins if v not in outs)
        cnt = 0
        for v1, w1 in ins.items():
            for v2, w2 in outs.items():
                if v1 == v2:
                    continue
                d = memo.lookup((v1 << 32) | v2)
                if d < 0 or w1 + w2 <= d:
                    cnt += 1
        P[u] = c_ed * (cnt - nb) + c_deg * nb + c_depth * int(depth[u])


def select(ov, live, P, tiebreak, threads=1, scratch=None):
    view = _View(ov)
    pl = P.tolist()
    tb = tiebreak.tolist()
    chosen = []
    for u in live.tolist():
        key = (pl[u], tb[u])
        ok = True
        for arcs in (view.out_arcs(u), view.in_arcs(u)):
            for v, _ in arcs:
                if not key < (pl[v], tb[v]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            chosen.append(u)
    return np.array(chosen, dtype=np.int64)


def check_independent(ov, C, threads=1, scratch=None):
    view = _View(ov)
    members = set(C.tolist())
    for u in members:
        for v, _ in view.out_arcs(u):
            if v in members:
                return False
    return True


def contract(ov, dist, C, depth, deg_out, nsc_out, threads=1, scratch=None):
    view = _View(ov)
    memo = _Table(dist)
    n = ov.n
    ef: list[tuple] = []
    eb: list[tuple] = []
    sc: list[tuple] = []
    s0 = np.zeros(n, dtype=np.uint8)
    aff = np.zeros(n, dtype=np.uint8)
    strict = 0
    updates: dict[int, int] = {}
    for u in C.tolist():
        outs = view.out_nbrs(u)
        ins = view.in_nbrs(u)
        ef.extend((u, v, w) for v, w in outs.items())
        eb.extend((u, v, w) for v, w in ins.items())
        nbrs = set(outs) | set(ins)
        du = int(depth[u]) + 1
        for v in nbrs:
            aff[v] = 1
            if du > updates.get(v, -1):
                updates[v] = du
        cnt = 0
        for v1, w1 in ins.items():
            for v2, w2 in outs.items():
                if v1 == v2:
                    continue
                s = w1 + w2
                d = memo.lookup((v1 << 32) | v2)
                if d < 0 or s <= d:
                    if 0 <= d and s < d:
                        strict += 1
                    sc.append((v1, v2, s))
                    s0[v1] = 1
                    cnt += 1
        deg_out[u] = len(nbrs)
        nsc_out[u] = cnt
    for v, du in updates.items():
        if du > depth[v]:
            depth[v] = du

    def cols(rows):
        a = np.array(rows, dtype=np.int64).reshape(-1, 3)
        return a[:, 0].copy(), a[:, 1].copy(), a[:, 2].copy()

    return (*cols(ef), *cols(eb), *cols(sc), s0, aff, strict)


def in_closure(ov, S0, threads=1, scratch=None):
    view = _View(ov)
    flags = np.zeros(ov.n, dtype=np.uint8)
    for s in S0.tolist():
        flags[s] = 1
        for v, _ in view.in_arcs(s):
            flags[v] = 1
    return np.flatnonzero(flags).astype(np.int64)


def merge(ov, threads=1):
    view = _View(ov)
    n = ov.n
    out_off = [0] * (n + 1)
    tgt: list[int] = []
    wts: list[int] = []
    for u in range(n):
        if not view.dead[u]:
            d = view.out_nbrs(u)
            for v in sorted(d):
                tgt.append(v)
                wts.append(d[v])
        out_off[u + 1] = len(tgt)
    m = len(tgt)
    in_cnt = [0] * (n + 1)
    for v in tgt:
        in_cnt[v + 1] += 1
    in_off = in_cnt
    for i in range(n):
        in_off[i + 1] += in_off[i]
    pos = in_off[:-1].copy()
    in_src = [0] * m
    in_w = [0] * m
    out_twin = [0] * m
    in_twin = [0] * m
    for u in range(n):
        for i in range(out_off[u], out_off[u + 1]):
            v = tgt[i]
            j = pos[v]
            pos[v] += 1
            in_src[j] = u
            in_w[j] = wts[i]
            out_twin[i] = j
            in_twin[j] = i
    i64 = lambda x: np.array(x, dtype=np.int64)  # noqa: E731
    return (i64(out_off), np.array(tgt, dtype=np.int32), i64(wts), i64(out_twin),
            i64(in_off), np.array(in_src, dtype=np.int32), i64(in_w), i64(in_twin))


def overlay_dijkstra(ov, s, t):
    view = _View(ov)
    best = {s: 0}
    done = set()
    heap = [(0, s)]
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done.add(x)
        if x == t:
            return d
        for y, w in view.out_arcs(x):
            if d + w < best.get(y, VALUE_MAX):
                best[y] = d + w
                heapq.heappush(heap, (d + w, y))
    return -1


# ------------------------------------------------------------------ searches

def dijkstra(off, tgt, w, s, t):
    """Plain Dijkstra; returns (distance array or single distance, settled)."""
    off_l, tgt_l, w_l = off.tolist(), tgt.tolist(), w.tolist()
    best = {s: 0}
    done: dict[int, int] = {}
    heap = [(0, s)]
    while heap:
        d, x = heapq.heappop(heap)
        if x in done:
            continue
        done[x] = d
        if x == t:
            return d, len(done)
        for i in range(off_l[x], off_l[x + 1]):
            y = tgt_l[i]
            nd = d + w_l[i]
            if nd < best.get(y, VALUE_MAX):
                best[y] = nd
                heapq.heappush(heap, (nd, y))
    if t >= 0:
        return -1, len(done)
    out = np.full(len(off_l) - 1, -1, dtype=np.int64)
    if done:
        out[list(done)] = list(done.values())
    return out, len(done)


def _two_sided(fwd, bwd, s, t, stop_on_sum):
    """Alternating bidirectional Dijkstra over two adjacency callables."""
    if s == t:
        return 0, 0
    dist = ({s: 0}, {t: 0})
    done = (set(), set())
    heaps = ([(0, s)], [(0, t)])
    adj = (fwd, bwd)
    mu = VALUE_MAX
    settled = 0
    side = 0
    while True:
        active = []
        for k in (0, 1):
            h = heaps[k]
            active.append(bool(h) and (stop_on_sum or h[0][0] < mu))
        if stop_on_sum:
            if not (heaps[0] and heaps[1]) or heaps[0][0][0] + heaps[1][0][0] >= mu:
                break
        elif not any(active):
            break
        if not active[side]:
            side ^= 1
        d, x = heapq.heappop(heaps[side])
        if x in done[side] or d != dist[side][x]:
            side ^= 1
            continue
        done[side].add(x)
        settled += 1
        other = dist[side ^ 1]
        if x in other and d + other[x] < mu:
            mu = d + other[x]
        for y, w in adj[side](x):
            nd = d + w
            if nd < dist[side].get(y, VALUE_MAX):
                dist[side][y] = nd
                heapq.heappush(heaps[side], (nd, y))
                if y in other and nd + other[y] < mu:
                    mu = nd + other[y]
        side ^= 1
    return (-1 if mu == VALUE_MAX else mu), settled


def bidir_dijkstra(out_off, out_tgt, out_w, in_off, in_src, in_w, s, t):
    oo, ot, ow = out_off.tolist(), out_tgt.tolist(), out_w.tolist()
    io, isrc, iw = in_off.tolist(), in_src.tolist(), in_w.tolist()

    def fwd(x):
        return ((ot[i], ow[i]) for i in range(oo[x], oo[x + 1]))

    def bwd(x):
        return ((isrc[i], iw[i]) for i in range(io[x], io[x + 1]))

    return _two_sided(fwd, bwd, s, t, stop_on_sum=True)


def ch_query(up_off, up_tgt, up_w, dn_off, dn_tgt, dn_w, s, t, exhaust=False, scratch=None):
    """Upward bidirectional search in rank space; returns (distance or -1, settled)."""
    uo, ut, uw = up_off, up_tgt, up_w
    do, dt, dw = dn_off, dn_tgt, dn_w

    def fwd(x):
        return ((int(ut[i]), int(uw[i])) for i in range(uo[x], uo[x + 1]))

    def bwd(x):
        return ((int(dt[i]), int(dw[i])) for i in range(do[x], do[x + 1]))

    if exhaust:
        return _exhaustive(fwd, bwd, s, t)
    return _two_sided(fwd, bwd, int(s), int(t), stop_on_sum=False)


def _exhaustive(fwd, bwd, s, t):
    if s == t:
        return 0, 0
    res = []
    for start, adj in ((s, fwd), (t, bwd)):
        best = {start: 0}
        done = {}
        heap = [(0, start)]
        while heap:
            d, x = heapq.heappop(heap)
            if x in done:
                continue
            done[x] = d
            for y, w in adj(x):
                if d + w < best.get(y, VALUE_MAX):
                    best[y] = d + w
                    heapq.heappush(heap, (d + w, y))
        res.append(done)
    f, b = res
    meet = [f[v] + b[v] for v in f if v in b]
    return (min(meet) if meet else -1), len(f) + len(b)
