# distutils: language = c++
# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels (OpenMP) for the contraction engine.

Mirrors ``_pykernels`` function for function. Parallel loops run one work
item per vertex with dynamic scheduling; per-thread scratch arrays are
epoch-stamped so they never need clearing between items.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.string cimport memset
from libcpp.vector cimport vector
from cython.parallel cimport prange, threadid

cnp.import_array()

cdef extern from * nogil:
    """
    #include <stdint.h>
    #include <vector>
    #include <utility>
    #include <algorithm>
    #include <functional>
    #ifdef _OPENMP
    #include <omp.h>
    static inline int spoch_max_threads(void) { return omp_get_max_threads(); }
    #else
    static inline int spoch_max_threads(void) { return 1; }
    #endif

    #define SPOCH_EMPTY UINT64_MAX
    #define SPOCH_TOMB (UINT64_MAX - 1)
    #define SPOCH_VMAX INT64_MAX

    static inline uint64_t spoch_mix64(uint64_t x) {
        x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
        x ^= x >> 27; x *= 0x94D049BB133111EBULL;
        x ^= x >> 31;
        return x;
    }
    static inline int spoch_cas_u64(uint64_t *p, uint64_t expected, uint64_t desired) {
        return __atomic_compare_exchange_n(p, &expected, desired, 0, __ATOMIC_ACQ_REL, __ATOMIC_ACQUIRE);
    }
    static inline uint64_t spoch_load_u64(const uint64_t *p) { return __atomic_load_n(p, __ATOMIC_ACQUIRE); }
    static inline void spoch_store_u64(uint64_t *p, uint64_t v) { __atomic_store_n(p, v, __ATOMIC_RELEASE); }
    static inline void spoch_write_min_i64(int64_t *p, int64_t v) {
        int64_t cur = __atomic_load_n(p, __ATOMIC_RELAXED);
        while (v < cur && !__atomic_compare_exchange_n(p, &cur, v, 1, __ATOMIC_ACQ_REL, __ATOMIC_RELAXED)) {}
    }
    static inline void spoch_write_max_i32(int32_t *p, int32_t v) {
        int32_t cur = __atomic_load_n(p, __ATOMIC_RELAXED);
        while (v > cur && !__atomic_compare_exchange_n(p, &cur, v, 1, __ATOMIC_ACQ_REL, __ATOMIC_RELAXED)) {}
    }
    static inline void spoch_store_u8(uint8_t *p, uint8_t v) { __atomic_store_n(p, v, __ATOMIC_RELAXED); }
    static inline void spoch_add_i64(int64_t *p, int64_t v) { __atomic_fetch_add(p, v, __ATOMIC_RELAXED); }

    typedef std::pair<int64_t, int32_t> SpochItem;
    struct SpochHeap {
        std::vector<SpochItem> v;
        void clear() { v.clear(); }
        bool empty() const { return v.empty(); }
        void push(int64_t d, int32_t x) {
            v.emplace_back(d, x);
            std::push_heap(v.begin(), v.end(), std::greater<SpochItem>());
        }
        int64_t top_d() const { return v.front().first; }
        int32_t top_x() const { return v.front().second; }
        void pop() {
            std::pop_heap(v.begin(), v.end(), std::greater<SpochItem>());
            v.pop_back();
        }
    };

    struct SpochBufs {
        std::vector<int32_t> out_v, in_v, nbr;
        std::vector<int64_t> out_w, in_w;
        SpochHeap heap;
        /* per-thread results */
        std::vector<uint64_t> rk;
        std::vector<int64_t> rv, ra;
        std::vector<int64_t> e1, e2, e3, b1, b2, b3, s1, s2, s3;
        std::vector<std::pair<int32_t, int64_t> > tmp;
        int64_t count;
    };

    static inline void spoch_sort_pairs(std::vector<std::pair<int32_t, int64_t> > &v) {
        std::sort(v.begin(), v.end());
    }
    """
    int spoch_max_threads()
    uint64_t SPOCH_EMPTY
    uint64_t SPOCH_TOMB
    int64_t SPOCH_VMAX
    uint64_t spoch_mix64(uint64_t x)
    int spoch_cas_u64(uint64_t* p, uint64_t expected, uint64_t desired)
    uint64_t spoch_load_u64(const uint64_t* p)
    void spoch_store_u64(uint64_t* p, uint64_t v)
    void spoch_write_min_i64(int64_t* p, int64_t v)
    void spoch_write_max_i32(int32_t* p, int32_t v)
    void spoch_store_u8(uint8_t* p, uint8_t v)
    void spoch_add_i64(int64_t* p, int64_t v)

    cdef cppclass SpochHeap:
        void clear()
        bint empty()
        void push(int64_t d, int32_t x)
        int64_t top_d()
        int32_t top_x()
        void pop()

    cdef cppclass SpochPair "std::pair<int32_t, int64_t>":
        SpochPair()
        SpochPair(int32_t, int64_t)
        int32_t first
        int64_t second

    cdef cppclass SpochBufs:
        vector[int32_t] out_v, in_v, nbr
        vector[int64_t] out_w, in_w
        SpochHeap heap
        vector[uint64_t] rk
        vector[int64_t] rv, ra
        vector[int64_t] e1, e2, e3, b1, b2, b3, s1, s2, s3
        vector[SpochPair] tmp
        int64_t count

    void spoch_sort_pairs(vector[SpochPair]& v)


cdef uint64_t LO32 = 0xFFFFFFFF
cdef int32_t EPOCH_LIMIT = 2000000000


def max_threads():
    return spoch_max_threads()


cdef inline int _nthreads(int threads) noexcept nogil:
    if threads <= 0:
        return spoch_max_threads()
    return threads


# ------------------------------------------------------------------ tables

cdef struct Table:
    uint64_t* keys
    int64_t* vals
    uint64_t mask
    uint64_t seed
    bint high


cdef inline void* _ptr(cnp.ndarray a, object dtype) except NULL:
    if a.dtype != dtype:
        raise TypeError(f"expected {dtype}, got {a.dtype}")
    if not a.flags.c_contiguous:
        raise ValueError("array must be C-contiguous")
    if a.size == 0:
        return <void*>&_dummy
    return cnp.PyArray_DATA(a)

cdef int64_t _dummy = 0

cdef Table _table(cnp.ndarray keys, cnp.ndarray vals, uint64_t seed, bint high) except *:
    cdef Table t
    t.keys = <uint64_t*>_ptr(keys, np.uint64)
    t.vals = <int64_t*>_ptr(vals, np.int64)
    t.mask = <uint64_t>keys.shape[0] - 1
    t.seed = seed
    t.high = high
    return t

cdef Table _map_table(object m) except *:
    return _table(m.keys, m.vals, <uint64_t>m.seed, m.probe_high)


cdef inline int t_insert_min(Table* t, uint64_t key, int64_t val) noexcept nogil:
    """1 = claimed a new slot, 0 = combined into an existing entry, -1 = full."""
    cdef uint64_t probe = (key >> 32) if t.high else key
    cdef uint64_t i = spoch_mix64(probe ^ t.seed) & t.mask
    cdef uint64_t start = i
    cdef uint64_t k
    while True:
        k = spoch_load_u64(&t.keys[i])
        if k == SPOCH_EMPTY:
            if spoch_cas_u64(&t.keys[i], SPOCH_EMPTY, key):
                spoch_write_min_i64(&t.vals[i], val)
                return 1
            k = spoch_load_u64(&t.keys[i])
        if k == key:
            spoch_write_min_i64(&t.vals[i], val)
            return 0
        i = (i + 1) & t.mask
        if i == start:
            return -1


cdef inline int64_t t_lookup(const Table* t, uint64_t key) noexcept nogil:
    cdef uint64_t probe = (key >> 32) if t.high else key
    cdef uint64_t i = spoch_mix64(probe ^ t.seed) & t.mask
    cdef uint64_t start = i
    cdef uint64_t k
    while True:
        k = t.keys[i]
        if k == key:
            return t.vals[i]
        if k == SPOCH_EMPTY:
            return -1
        i = (i + 1) & t.mask
        if i == start:
            return -1


cdef inline int t_delete(Table* t, uint64_t key) noexcept nogil:
    cdef uint64_t probe = (key >> 32) if t.high else key
    cdef uint64_t i = spoch_mix64(probe ^ t.seed) & t.mask
    cdef uint64_t start = i
    cdef uint64_t k
    while True:
        k = t.keys[i]
        if k == key:
            spoch_store_u64(&t.keys[i], SPOCH_TOMB)
            return 1
        if k == SPOCH_EMPTY:
            return 0
        i = (i + 1) & t.mask
        if i == start:
            return 0


def map_insert_min(cnp.ndarray keys, cnp.ndarray vals, uint64_t seed, bint probe_high,
                   cnp.ndarray qk, cnp.ndarray qv, int threads=1):
    cdef Table t = _table(keys, vals, seed, probe_high)
    cdef uint64_t* k = <uint64_t*>_ptr(qk, np.uint64)
    cdef int64_t* v = <int64_t*>_ptr(qv, np.int64)
    cdef Py_ssize_t i, n = qk.shape[0]
    cdef int64_t claimed = 0, failed = 0
    cdef int r
    cdef int nt = _nthreads(threads)
    for i in prange(n, nogil=True, schedule="static", num_threads=nt):
        r = t_insert_min(&t, k[i], v[i])
        if r == 1:
            claimed += 1
        elif r < 0:
            failed += 1
    return int(claimed), int(failed)


def map_lookup(cnp.ndarray keys, cnp.ndarray vals, uint64_t seed, bint probe_high,
               cnp.ndarray qk, int threads=1):
    cdef Table t = _table(keys, vals, seed, probe_high)
    cdef uint64_t* k = <uint64_t*>_ptr(qk, np.uint64)
    cdef Py_ssize_t i, n = qk.shape[0]
    out = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int nt = _nthreads(threads)
    for i in prange(n, nogil=True, schedule="static", num_threads=nt):
        o[i] = t_lookup(&t, k[i])
    return out


def map_delete(cnp.ndarray keys, cnp.ndarray vals, uint64_t seed, bint probe_high,
               cnp.ndarray qk, int threads=1):
    cdef Table t = _table(keys, vals, seed, probe_high)
    cdef uint64_t* k = <uint64_t*>_ptr(qk, np.uint64)
    cdef Py_ssize_t i, n = qk.shape[0]
    cdef int64_t deleted = 0
    cdef int nt = _nthreads(threads)
    for i in prange(n, nogil=True, schedule="static", num_threads=nt):
        deleted += t_delete(&t, k[i])
    return int(deleted)


def map_probe_group(cnp.ndarray keys, cnp.ndarray vals, uint64_t seed, uint64_t group):
    cdef Table t = _table(keys, vals, seed, True)
    cdef uint64_t i = spoch_mix64(group ^ t.seed) & t.mask
    cdef uint64_t start = i, k
    lo, vs = [], []
    while True:
        k = t.keys[i]
        if k == SPOCH_EMPTY:
            break
        if k != SPOCH_TOMB and (k >> 32) == group:
            lo.append(<int64_t>(k & LO32))
            vs.append(t.vals[i])
        i = (i + 1) & t.mask
        if i == start:
            break
    return np.array(lo, dtype=np.int64), np.array(vs, dtype=np.int64)


# ------------------------------------------------------------------ overlay

cdef struct OV:
    int64_t n
    int64_t* out_off
    int32_t* out_tgt
    int64_t* out_w
    int64_t* in_off
    int32_t* in_src
    int64_t* in_w
    uint8_t* dead
    Table sc_out
    Table sc_in


cdef OV _overlay(object ov) except *:
    cdef OV o
    o.n = ov.n
    o.out_off = <int64_t*>_ptr(ov.out_off, np.int64)
    o.out_tgt = <int32_t*>_ptr(ov.out_tgt, np.int32)
    o.out_w = <int64_t*>_ptr(ov.out_w, np.int64)
    o.in_off = <int64_t*>_ptr(ov.in_off, np.int64)
    o.in_src = <int32_t*>_ptr(ov.in_src, np.int32)
    o.in_w = <int64_t*>_ptr(ov.in_w, np.int64)
    o.dead = <uint8_t*>_ptr(ov.contracted, np.uint8)
    o.sc_out = _map_table(ov.sc_out)
    o.sc_in = _map_table(ov.sc_in)
    return o


cdef struct TS:
    int32_t* st_out
    int32_t* st_in
    int32_t* st_dij
    int32_t* st_set
    int32_t* st_tgt
    int64_t* w_out
    int64_t* w_in
    int64_t* d_dij
    int64_t n
    int32_t epoch


cdef class Scratch:
    """Per-thread stamp/value arrays sized to the vertex count."""
    cdef public object stamps, values, epochs
    cdef public int threads
    cdef public int64_t n

    def __init__(self, int64_t n, int threads):
        self.n = n
        self.threads = threads
        self.stamps = np.zeros((threads, 5, max(n, 1)), dtype=np.int32)
        self.values = np.zeros((threads, 3, max(n, 1)), dtype=np.int64)
        self.epochs = np.zeros(threads, dtype=np.int32)


def make_scratch(int64_t n, int threads):
    return Scratch(n, _nthreads(threads))


def make_query_scratch(int64_t n):
    return Scratch(n, 1)


cdef vector[TS] _thread_scratch(Scratch sc, int nt) except *:
    if sc is None or sc.threads < nt:
        raise ValueError("scratch has fewer slots than threads")
    cdef cnp.ndarray st = sc.stamps
    cdef cnp.ndarray va = sc.values
    cdef int32_t* sp = <int32_t*>_ptr(st, np.int32)
    cdef int64_t* vp = <int64_t*>_ptr(va, np.int64)
    cdef int64_t n = st.shape[2]
    cdef vector[TS] out
    cdef TS ts
    cdef int i
    cdef int32_t[::1] ep = sc.epochs
    for i in range(nt):
        ts.st_out = sp + (i * 5 + 0) * n
        ts.st_in = sp + (i * 5 + 1) * n
        ts.st_dij = sp + (i * 5 + 2) * n
        ts.st_set = sp + (i * 5 + 3) * n
        ts.st_tgt = sp + (i * 5 + 4) * n
        ts.w_out = vp + (i * 3 + 0) * n
        ts.w_in = vp + (i * 3 + 1) * n
        ts.d_dij = vp + (i * 3 + 2) * n
        ts.n = n
        ts.epoch = ep[i]
        out.push_back(ts)
    return out


cdef void _save_epochs(Scratch sc, vector[TS]& ts):
    cdef int32_t[::1] ep = sc.epochs
    cdef size_t i
    for i in range(ts.size()):
        ep[i] = ts[i].epoch


cdef inline void begin_item(TS* ts) noexcept nogil:
    if ts.epoch > EPOCH_LIMIT:
        memset(ts.st_out, 0, ts.n * 5 * sizeof(int32_t))
        ts.epoch = 0


cdef inline int32_t bump(TS* ts) noexcept nogil:
    ts.epoch += 1
    return ts.epoch


cdef inline int32_t gather_out(OV* ov, int32_t u, TS* ts, vector[int32_t]& vs, vector[int64_t]& ws) noexcept nogil:
    """Distinct live out-neighbors of u with minimum weights; returns the epoch
    under which ``ts.st_out`` marks them."""
    cdef int32_t e = bump(ts)
    cdef int64_t i, w
    cdef int32_t v
    cdef uint64_t k, j, start
    cdef size_t a
    vs.clear()
    ws.clear()
    for i in range(ov.out_off[u], ov.out_off[u + 1]):
        w = ov.out_w[i]
        if w < 0:
            continue
        v = ov.out_tgt[i]
        if ov.dead[v]:
            continue
        if ts.st_out[v] != e:
            ts.st_out[v] = e
            ts.w_out[v] = w
            vs.push_back(v)
        elif w < ts.w_out[v]:
            ts.w_out[v] = w
    j = spoch_mix64(<uint64_t>u ^ ov.sc_out.seed) & ov.sc_out.mask
    start = j
    while True:
        k = ov.sc_out.keys[j]
        if k == SPOCH_EMPTY:
            break
        if k != SPOCH_TOMB and (k >> 32) == <uint64_t>u:
            v = <int32_t>(k & LO32)
            if not ov.dead[v]:
                w = ov.sc_out.vals[j]
                if ts.st_out[v] != e:
                    ts.st_out[v] = e
                    ts.w_out[v] = w
                    vs.push_back(v)
                elif w < ts.w_out[v]:
                    ts.w_out[v] = w
        j = (j + 1) & ov.sc_out.mask
        if j == start:
            break
    ws.resize(vs.size())
    for a in range(vs.size()):
        ws[a] = ts.w_out[vs[a]]
    return e


cdef inline int32_t gather_in(OV* ov, int32_t u, TS* ts, vector[int32_t]& vs, vector[int64_t]& ws) noexcept nogil:
    cdef int32_t e = bump(ts)
    cdef int64_t i, w
    cdef int32_t v
    cdef uint64_t k, j, start
    cdef size_t a
    vs.clear()
    ws.clear()
    for i in range(ov.in_off[u], ov.in_off[u + 1]):
        w = ov.in_w[i]
        if w < 0:
            continue
        v = ov.in_src[i]
        if ov.dead[v]:
            continue
        if ts.st_in[v] != e:
            ts.st_in[v] = e
            ts.w_in[v] = w
            vs.push_back(v)
        elif w < ts.w_in[v]:
            ts.w_in[v] = w
    j = spoch_mix64(<uint64_t>u ^ ov.sc_in.seed) & ov.sc_in.mask
    start = j
    while True:
        k = ov.sc_in.keys[j]
        if k == SPOCH_EMPTY:
            break
        if k != SPOCH_TOMB and (k >> 32) == <uint64_t>u:
            v = <int32_t>(k & LO32)
            if not ov.dead[v]:
                w = ov.sc_in.vals[j]
                if ts.st_in[v] != e:
                    ts.st_in[v] = e
                    ts.w_in[v] = w
                    vs.push_back(v)
                elif w < ts.w_in[v]:
                    ts.w_in[v] = w
        j = (j + 1) & ov.sc_in.mask
        if j == start:
            break
    ws.resize(vs.size())
    for a in range(vs.size()):
        ws[a] = ts.w_in[vs[a]]
    return e


def neighbors(object overlay, int64_t u, bint out):
    cdef OV ov = _overlay(overlay)
    cdef Scratch sc = Scratch(ov.n, 1)
    cdef vector[TS] ts = _thread_scratch(sc, 1)
    cdef vector[int32_t] vs
    cdef vector[int64_t] ws
    if out:
        gather_out(&ov, <int32_t>u, &ts[0], vs, ws)
    else:
        gather_in(&ov, <int32_t>u, &ts[0], vs, ws)
    pairs = sorted(zip([vs[i] for i in range(vs.size())], [ws[i] for i in range(ws.size())]))
    return (np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.int64))


# ------------------------------------------------------------------ local search

cdef inline void _relax_out(OV* ov, TS* ts, SpochHeap* heap, int32_t x, int64_t d, int32_t e) noexcept nogil:
    cdef int64_t i, w, nd
    cdef int32_t y
    cdef uint64_t k, j, start
    for i in range(ov.out_off[x], ov.out_off[x + 1]):
        w = ov.out_w[i]
        if w < 0:
            continue
        y = ov.out_tgt[i]
        if ov.dead[y]:
            continue
        nd = d + w
        if ts.st_dij[y] != e:
            ts.st_dij[y] = e
            ts.d_dij[y] = nd
            heap.push(nd, y)
        elif nd < ts.d_dij[y]:
            ts.d_dij[y] = nd
            heap.push(nd, y)
    j = spoch_mix64(<uint64_t>x ^ ov.sc_out.seed) & ov.sc_out.mask
    start = j
    while True:
        k = ov.sc_out.keys[j]
        if k == SPOCH_EMPTY:
            break
        if k != SPOCH_TOMB and (k >> 32) == <uint64_t>x:
            y = <int32_t>(k & LO32)
            if not ov.dead[y]:
                nd = d + ov.sc_out.vals[j]
                if ts.st_dij[y] != e:
                    ts.st_dij[y] = e
                    ts.d_dij[y] = nd
                    heap.push(nd, y)
                elif nd < ts.d_dij[y]:
                    ts.d_dij[y] = nd
                    heap.push(nd, y)
        j = (j + 1) & ov.sc_out.mask
        if j == start:
            break


cdef void _ls_one(OV* ov, Table* memo, uint8_t* aff, int32_t s, int64_t theta, bint prune,
                  TS* ts, SpochBufs* b) noexcept nogil:
    cdef size_t a, c
    cdef int32_t u, v, x, e_t, e_d = 0
    cdef int64_t ntarget = 0, remaining, settled, d, i, w
    cdef uint64_t key, k, j, start
    cdef bint searched = False
    begin_item(ts)
    gather_out(ov, s, ts, b.out_v, b.out_w)
    b.nbr.assign(b.out_v.begin(), b.out_v.end())
    e_t = bump(ts)
    for a in range(b.nbr.size()):
        u = b.nbr[a]
        if not aff[u]:
            continue
        gather_out(ov, u, ts, b.out_v, b.out_w)
        for c in range(b.out_v.size()):
            v = b.out_v[c]
            if v == s or ts.st_tgt[v] == e_t:
                continue
            if t_lookup(memo, (<uint64_t>s << 32) | <uint64_t>v) >= 0:
                continue
            ts.st_tgt[v] = e_t
            ntarget += 1
    if ntarget > 0:
        searched = True
        b.count += 1
        e_d = bump(ts)
        b.heap.clear()
        ts.st_dij[s] = e_d
        ts.d_dij[s] = 0
        b.heap.push(0, s)
        remaining = ntarget
        settled = 0
        while not b.heap.empty():
            d = b.heap.top_d()
            x = b.heap.top_x()
            b.heap.pop()
            if ts.st_set[x] == e_d or d != ts.d_dij[x]:
                continue
            ts.st_set[x] = e_d
            settled += 1
            if ts.st_tgt[x] == e_t:
                b.rk.push_back((<uint64_t>s << 32) | <uint64_t>x)
                b.rv.push_back(d)
                remaining -= 1
            if remaining == 0 or settled >= theta:
                break
            _relax_out(ov, ts, &b.heap, x, d, e_d)
    if not prune:
        return
    for i in range(ov.out_off[s], ov.out_off[s + 1]):
        w = ov.out_w[i]
        if w < 0:
            continue
        v = ov.out_tgt[i]
        if ov.dead[v]:
            continue
        if searched and ts.st_tgt[v] == e_t and ts.st_set[v] == e_d:
            d = ts.d_dij[v]
        else:
            d = t_lookup(memo, (<uint64_t>s << 32) | <uint64_t>v)
        if d >= 0 and d < w:
            b.ra.push_back(i)
    j = spoch_mix64(<uint64_t>s ^ ov.sc_out.seed) & ov.sc_out.mask
    start = j
    while True:
        k = ov.sc_out.keys[j]
        if k == SPOCH_EMPTY:
            break
        if k != SPOCH_TOMB and (k >> 32) == <uint64_t>s:
            v = <int32_t>(k & LO32)
            if not ov.dead[v]:
                w = ov.sc_out.vals[j]
                if searched and ts.st_tgt[v] == e_t and ts.st_set[v] == e_d:
                    d = ts.d_dij[v]
                else:
                    d = t_lookup(memo, k)
                if d >= 0 and d < w:
                    b.s1.push_back(<int64_t>k)
        j = (j + 1) & ov.sc_out.mask
        if j == start:
            break


cdef object _cat_u64(vector[SpochBufs]& bufs, int which):
    cdef size_t total = 0, t, i, pos = 0
    for t in range(bufs.size()):
        total += bufs[t].rk.size() if which == 0 else bufs[t].s1.size()
    out = np.empty(total, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    for t in range(bufs.size()):
        if which == 0:
            for i in range(bufs[t].rk.size()):
                o[pos] = bufs[t].rk[i]
                pos += 1
        else:
            for i in range(bufs[t].s1.size()):
                o[pos] = <uint64_t>bufs[t].s1[i]
                pos += 1
    return out


cdef object _cat_i64(vector[SpochBufs]& bufs, int which):
    cdef size_t total = 0, t, i, pos = 0
    cdef vector[int64_t]* src
    for t in range(bufs.size()):
        total += _field(&bufs[t], which).size()
    out = np.empty(total, dtype=np.int64)
    cdef int64_t[::1] o = out
    for t in range(bufs.size()):
        src = _field(&bufs[t], which)
        for i in range(src.size()):
            o[pos] = src[0][i]
            pos += 1
    return out


cdef vector[int64_t]* _field(SpochBufs* b, int which) noexcept nogil:
    if which == 0:
        return &b.rv
    if which == 1:
        return &b.ra
    if which == 2:
        return &b.e1
    if which == 3:
        return &b.e2
    if which == 4:
        return &b.e3
    if which == 5:
        return &b.b1
    if which == 6:
        return &b.b2
    if which == 7:
        return &b.b3
    if which == 8:
        return &b.s1
    if which == 9:
        return &b.s2
    return &b.s3


def local_search(object overlay, object dist, cnp.ndarray S, cnp.ndarray a_flags, int64_t theta,
                 bint prune, int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    cdef Table memo = _map_table(dist)
    cdef int64_t* src = <int64_t*>_ptr(S, np.int64)
    cdef uint8_t* aff = <uint8_t*>_ptr(a_flags, np.uint8)
    cdef int nt = _nthreads(threads)
    cdef vector[TS] ts = _thread_scratch(scratch, nt)
    cdef vector[SpochBufs] bufs = vector[SpochBufs](nt)
    cdef Py_ssize_t j, n = S.shape[0]
    cdef int tid
    cdef int64_t wps = 0
    cdef size_t t
    for t in range(bufs.size()):
        bufs[t].count = 0
    for j in prange(n, nogil=True, schedule="dynamic", chunksize=16, num_threads=nt):
        tid = threadid()
        _ls_one(&ov, &memo, aff, <int32_t>src[j], theta, prune, &ts[tid], &bufs[tid])
    _save_epochs(scratch, ts)
    for t in range(bufs.size()):
        wps += bufs[t].count
    return (_cat_u64(bufs, 0), _cat_i64(bufs, 0), _cat_i64(bufs, 1), _cat_u64(bufs, 1), int(wps))


# ------------------------------------------------------------------ score / select

cdef void _score_one(OV* ov, Table* memo, int32_t u, double* P, int32_t* depth,
                     double c_ed, double c_deg, double c_depth, TS* ts, SpochBufs* b) noexcept nogil:
    cdef int32_t e_o
    cdef size_t a, c
    cdef int64_t nb, cnt = 0, d, w1
    cdef int32_t v1, v2
    begin_item(ts)
    e_o = gather_out(ov, u, ts, b.out_v, b.out_w)
    gather_in(ov, u, ts, b.in_v, b.in_w)
    nb = <int64_t>b.out_v.size()
    for a in range(b.in_v.size()):
        if ts.st_out[b.in_v[a]] != e_o:
            nb += 1
    for a in range(b.in_v.size()):
        v1 = b.in_v[a]
        w1 = b.in_w[a]
        for c in range(b.out_v.size()):
            v2 = b.out_v[c]
            if v1 == v2:
                continue
            d = t_lookup(memo, (<uint64_t>v1 << 32) | <uint64_t>v2)
            if d < 0 or w1 + b.out_w[c] <= d:
                cnt += 1
    P[u] = c_ed * <double>(cnt - nb) + c_deg * <double>nb + c_depth * <double>depth[u]


def score(object overlay, object dist, cnp.ndarray A, cnp.ndarray P, cnp.ndarray depth,
          double c_ed, double c_deg, double c_depth, int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    cdef Table memo = _map_table(dist)
    cdef int64_t* aa = <int64_t*>_ptr(A, np.int64)
    cdef double* pp = <double*>_ptr(P, np.float64)
    cdef int32_t* dp = <int32_t*>_ptr(depth, np.int32)
    cdef int nt = _nthreads(threads)
    cdef vector[TS] ts = _thread_scratch(scratch, nt)
    cdef vector[SpochBufs] bufs = vector[SpochBufs](nt)
    cdef Py_ssize_t j, n = A.shape[0]
    cdef int tid
    for j in prange(n, nogil=True, schedule="dynamic", chunksize=16, num_threads=nt):
        tid = threadid()
        _score_one(&ov, &memo, <int32_t>aa[j], pp, dp, c_ed, c_deg, c_depth, &ts[tid], &bufs[tid])
    _save_epochs(scratch, ts)


cdef inline bint _before(double* P, int64_t* tb, int32_t u, int32_t v) noexcept nogil:
    return P[u] < P[v] or (P[u] == P[v] and tb[u] < tb[v])


cdef bint _is_local_min(OV* ov, double* P, int64_t* tb, int32_t u) noexcept nogil:
    cdef int64_t i
    cdef int32_t v
    cdef uint64_t k, j, start
    cdef Table* t
    cdef int side
    for i in range(ov.out_off[u], ov.out_off[u + 1]):
        if ov.out_w[i] >= 0:
            v = ov.out_tgt[i]
            if not ov.dead[v] and not _before(P, tb, u, v):
                return False
    for i in range(ov.in_off[u], ov.in_off[u + 1]):
        if ov.in_w[i] >= 0:
            v = ov.in_src[i]
            if not ov.dead[v] and not _before(P, tb, u, v):
                return False
    for side in range(2):
        t = &ov.sc_out if side == 0 else &ov.sc_in
        j = spoch_mix64(<uint64_t>u ^ t.seed) & t.mask
        start = j
        while True:
            k = t.keys[j]
            if k == SPOCH_EMPTY:
                break
            if k != SPOCH_TOMB and (k >> 32) == <uint64_t>u:
                v = <int32_t>(k & LO32)
                if not ov.dead[v] and not _before(P, tb, u, v):
                    return False
            j = (j + 1) & t.mask
            if j == start:
                break
    return True


def select(object overlay, cnp.ndarray live, cnp.ndarray P, cnp.ndarray tiebreak,
           int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    cdef int64_t* lv = <int64_t*>_ptr(live, np.int64)
    cdef double* pp = <double*>_ptr(P, np.float64)
    cdef int64_t* tb = <int64_t*>_ptr(tiebreak, np.int64)
    cdef Py_ssize_t j, n = live.shape[0]
    flags = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] f = flags
    cdef int nt = _nthreads(threads)
    for j in prange(n, nogil=True, schedule="dynamic", chunksize=256, num_threads=nt):
        if _is_local_min(&ov, pp, tb, <int32_t>lv[j]):
            f[j] = 1
    return live[flags.view(bool)]


def check_independent(object overlay, cnp.ndarray C, int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    members = np.zeros(ov.n, dtype=np.uint8)
    members[C] = 1
    cdef uint8_t[::1] mem = members
    cdef int64_t* cc = <int64_t*>_ptr(C, np.int64)
    cdef Py_ssize_t j, n = C.shape[0]
    cdef int64_t i, bad = 0
    cdef int32_t u, v
    cdef uint64_t k, jj, start
    for j in range(n):
        u = <int32_t>cc[j]
        for i in range(ov.out_off[u], ov.out_off[u + 1]):
            v = ov.out_tgt[i]
            if ov.out_w[i] >= 0 and not ov.dead[v] and mem[v]:
                bad += 1
        jj = spoch_mix64(<uint64_t>u ^ ov.sc_out.seed) & ov.sc_out.mask
        start = jj
        while True:
            k = ov.sc_out.keys[jj]
            if k == SPOCH_EMPTY:
                break
            if k != SPOCH_TOMB and (k >> 32) == <uint64_t>u:
                v = <int32_t>(k & LO32)
                if not ov.dead[v] and mem[v]:
                    bad += 1
            jj = (jj + 1) & ov.sc_out.mask
            if jj == start:
                break
    return bad == 0


# ------------------------------------------------------------------ contract

cdef void _contract_one(OV* ov, Table* memo, int32_t u, int32_t* depth, uint8_t* s0, uint8_t* aff,
                        int32_t* deg, int32_t* nsc, int64_t* strict, TS* ts, SpochBufs* b) noexcept nogil:
    cdef int32_t e_o, v, v1, v2
    cdef size_t a, c
    cdef int64_t nb, cnt = 0, d, s, w1
    cdef int32_t du = depth[u] + 1
    begin_item(ts)
    e_o = gather_out(ov, u, ts, b.out_v, b.out_w)
    gather_in(ov, u, ts, b.in_v, b.in_w)
    nb = <int64_t>b.out_v.size()
    for a in range(b.out_v.size()):
        v = b.out_v[a]
        b.e1.push_back(u)
        b.e2.push_back(v)
        b.e3.push_back(b.out_w[a])
        spoch_store_u8(&aff[v], 1)
        spoch_write_max_i32(&depth[v], du)
    for a in range(b.in_v.size()):
        v = b.in_v[a]
        b.b1.push_back(u)
        b.b2.push_back(v)
        b.b3.push_back(b.in_w[a])
        if ts.st_out[v] != e_o:
            nb += 1
            spoch_store_u8(&aff[v], 1)
            spoch_write_max_i32(&depth[v], du)
    for a in range(b.in_v.size()):
        v1 = b.in_v[a]
        w1 = b.in_w[a]
        for c in range(b.out_v.size()):
            v2 = b.out_v[c]
            if v1 == v2:
                continue
            s = w1 + b.out_w[c]
            d = t_lookup(memo, (<uint64_t>v1 << 32) | <uint64_t>v2)
            if d < 0 or s <= d:
                if d >= 0 and s < d:
                    spoch_add_i64(strict, 1)
                b.s1.push_back(v1)
                b.s2.push_back(v2)
                b.s3.push_back(s)
                spoch_store_u8(&s0[v1], 1)
                cnt += 1
    deg[u] = <int32_t>nb
    nsc[u] = <int32_t>cnt


def contract(object overlay, object dist, cnp.ndarray C, cnp.ndarray depth, cnp.ndarray deg_out,
             cnp.ndarray nsc_out, int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    cdef Table memo = _map_table(dist)
    cdef int64_t* cc = <int64_t*>_ptr(C, np.int64)
    cdef int32_t* dp = <int32_t*>_ptr(depth, np.int32)
    cdef int32_t* dg = <int32_t*>_ptr(deg_out, np.int32)
    cdef int32_t* ns = <int32_t*>_ptr(nsc_out, np.int32)
    s0 = np.zeros(ov.n, dtype=np.uint8)
    aff = np.zeros(ov.n, dtype=np.uint8)
    cdef uint8_t* s0p = <uint8_t*>_ptr(s0, np.uint8)
    cdef uint8_t* afp = <uint8_t*>_ptr(aff, np.uint8)
    cdef int nt = _nthreads(threads)
    cdef vector[TS] ts = _thread_scratch(scratch, nt)
    cdef vector[SpochBufs] bufs = vector[SpochBufs](nt)
    cdef Py_ssize_t j, n = C.shape[0]
    cdef int tid
    cdef int64_t strict = 0
    for j in prange(n, nogil=True, schedule="dynamic", chunksize=16, num_threads=nt):
        tid = threadid()
        _contract_one(&ov, &memo, <int32_t>cc[j], dp, s0p, afp, dg, ns, &strict, &ts[tid], &bufs[tid])
    _save_epochs(scratch, ts)
    return tuple(_cat_i64(bufs, w) for w in range(2, 11)) + (s0, aff, int(strict))


def in_closure(object overlay, cnp.ndarray S0, int threads=1, Scratch scratch=None):
    cdef OV ov = _overlay(overlay)
    flags = np.zeros(ov.n, dtype=np.uint8)
    cdef uint8_t* fp = <uint8_t*>_ptr(flags, np.uint8)
    cdef int64_t* ss = <int64_t*>_ptr(S0, np.int64)
    cdef Py_ssize_t j, n = S0.shape[0]
    cdef int64_t i
    cdef int32_t s, v
    cdef uint64_t k, jj, start
    cdef int nt = _nthreads(threads)
    for j in prange(n, nogil=True, schedule="dynamic", chunksize=64, num_threads=nt):
        s = <int32_t>ss[j]
        spoch_store_u8(&fp[s], 1)
        for i in range(ov.in_off[s], ov.in_off[s + 1]):
            v = ov.in_src[i]
            if ov.in_w[i] >= 0 and not ov.dead[v]:
                spoch_store_u8(&fp[v], 1)
        jj = spoch_mix64(<uint64_t>s ^ ov.sc_in.seed) & ov.sc_in.mask
        start = jj
        while True:
            k = ov.sc_in.keys[jj]
            if k == SPOCH_EMPTY:
                break
            if k != SPOCH_TOMB and (k >> 32) == <uint64_t>s:
                v = <int32_t>(k & LO32)
                if not ov.dead[v]:
                    spoch_store_u8(&fp[v], 1)
            jj = (jj + 1) & ov.sc_in.mask
            if jj == start:
                break
    return np.flatnonzero(flags).astype(np.int64)


# ------------------------------------------------------------------ merge

cdef void _merge_one(OV* ov, int32_t u, int64_t* off, int32_t* tgt, int64_t* wts,
                     TS* ts, SpochBufs* b) noexcept nogil:
    cdef size_t a
    cdef int64_t base
    begin_item(ts)
    gather_out(ov, u, ts, b.out_v, b.out_w)
    b.tmp.clear()
    for a in range(b.out_v.size()):
        b.tmp.push_back(SpochPair(b.out_v[a], b.out_w[a]))
    spoch_sort_pairs(b.tmp)
    base = off[u]
    for a in range(b.tmp.size()):
        tgt[base + <int64_t>a] = b.tmp[a].first
        wts[base + <int64_t>a] = b.tmp[a].second


def merge(object overlay, int threads=1):
    cdef OV ov = _overlay(overlay)
    cdef int64_t n = ov.n
    cdef int nt = _nthreads(threads)
    cdef Scratch sc = Scratch(n, nt)
    cdef vector[TS] ts = _thread_scratch(sc, nt)
    cdef vector[SpochBufs] bufs = vector[SpochBufs](nt)
    cdef Py_ssize_t u
    cdef int tid
    counts = np.zeros(n + 1, dtype=np.int64)
    cdef int64_t[::1] cnt = counts
    for u in prange(n, nogil=True, schedule="dynamic", chunksize=256, num_threads=nt):
        tid = threadid()
        if not ov.dead[u]:
            begin_item(&ts[tid])
            gather_out(&ov, <int32_t>u, &ts[tid], bufs[tid].out_v, bufs[tid].out_w)
            cnt[u + 1] = <int64_t>bufs[tid].out_v.size()
    out_off = np.cumsum(counts).astype(np.int64)
    cdef int64_t m = out_off[n]
    out_tgt = np.empty(m, dtype=np.int32)
    out_w = np.empty(m, dtype=np.int64)
    cdef int64_t* op = <int64_t*>_ptr(out_off, np.int64)
    cdef int32_t* tp = <int32_t*>_ptr(out_tgt, np.int32)
    cdef int64_t* wp = <int64_t*>_ptr(out_w, np.int64)
    for u in prange(n, nogil=True, schedule="dynamic", chunksize=256, num_threads=nt):
        tid = threadid()
        if not ov.dead[u]:
            _merge_one(&ov, <int32_t>u, op, tp, wp, &ts[tid], &bufs[tid])
    # transpose; scanning sources in order keeps every in-list sorted by source
    in_cnt = np.bincount(out_tgt, minlength=n) if m else np.zeros(n, dtype=np.int64)
    in_off = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(in_cnt, out=in_off[1:])
    in_src = np.empty(m, dtype=np.int32)
    in_w = np.empty(m, dtype=np.int64)
    out_twin = np.empty(m, dtype=np.int64)
    in_twin = np.empty(m, dtype=np.int64)
    pos = in_off[:n].copy() if n else np.zeros(0, dtype=np.int64)
    cdef int64_t[::1] pp = pos
    cdef int32_t[::1] isp = in_src
    cdef int64_t[::1] iwp = in_w
    cdef int64_t[::1] otw = out_twin
    cdef int64_t[::1] itw = in_twin
    cdef int64_t i, jpos
    cdef int32_t v
    with nogil:
        for u in range(n):
            for i in range(op[u], op[u + 1]):
                v = tp[i]
                jpos = pp[v]
                pp[v] += 1
                isp[jpos] = <int32_t>u
                iwp[jpos] = wp[i]
                otw[i] = jpos
                itw[jpos] = i
    return out_off, out_tgt, out_w, out_twin, in_off, in_src, in_w, in_twin


def overlay_dijkstra(object overlay, int64_t s, int64_t t):
    cdef OV ov = _overlay(overlay)
    cdef Scratch sc = Scratch(ov.n, 1)
    cdef vector[TS] ts = _thread_scratch(sc, 1)
    cdef SpochHeap heap
    cdef int32_t e = bump(&ts[0])
    cdef int64_t d
    cdef int32_t x
    ts[0].st_dij[s] = e
    ts[0].d_dij[s] = 0
    heap.push(0, <int32_t>s)
    while not heap.empty():
        d = heap.top_d()
        x = heap.top_x()
        heap.pop()
        if ts[0].st_set[x] == e or d != ts[0].d_dij[x]:
            continue
        ts[0].st_set[x] = e
        if x == t:
            return int(d)
        _relax_out(&ov, &ts[0], &heap, x, d, e)
    return -1


# ------------------------------------------------------------------ plain searches

def dijkstra(cnp.ndarray off, cnp.ndarray tgt, cnp.ndarray w, int64_t s, int64_t t):
    cdef int64_t* op = <int64_t*>_ptr(off, np.int64)
    cdef int32_t* tp = <int32_t*>_ptr(tgt, np.int32)
    cdef int64_t* wp = <int64_t*>_ptr(w, np.int64)
    cdef int64_t n = off.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    done = np.zeros(n, dtype=np.uint8)
    cdef int64_t[::1] dd = dist
    cdef uint8_t[::1] dn = done
    cdef SpochHeap heap
    cdef int64_t d, nd, i, settled = 0
    cdef int32_t x, y
    dd[s] = 0
    heap.push(0, <int32_t>s)
    with nogil:
        while not heap.empty():
            d = heap.top_d()
            x = heap.top_x()
            heap.pop()
            if dn[x] or d != dd[x]:
                continue
            dn[x] = 1
            settled += 1
            if x == t:
                break
            for i in range(op[x], op[x + 1]):
                y = tp[i]
                nd = d + wp[i]
                if dd[y] < 0 or nd < dd[y]:
                    dd[y] = nd
                    heap.push(nd, y)
    if t >= 0:
        return (int(dd[t]) if dn[t] else -1), int(settled)
    dist[done == 0] = -1
    return dist, int(settled)


cdef struct Side:
    int64_t* off
    int32_t* tgt
    int64_t* w
    int32_t* st
    int32_t* fin
    int64_t* d


cdef (int64_t, int64_t) _bidir(Side* sides, int32_t e, int64_t s, int64_t t, bint stop_on_sum,
                               SpochHeap* heaps) noexcept nogil:
    """Alternating two-sided Dijkstra; same control flow as the Python twin."""
    cdef int64_t mu = SPOCH_VMAX, settled = 0, d, nd, i
    cdef int32_t x, y
    cdef int side = 0, other
    cdef bint act0, act1, cur
    cdef Side* me
    cdef Side* op
    if s == t:
        return 0, 0
    heaps[0].clear()
    heaps[1].clear()
    sides[0].st[s] = e
    sides[0].d[s] = 0
    sides[1].st[t] = e
    sides[1].d[t] = 0
    heaps[0].push(0, <int32_t>s)
    heaps[1].push(0, <int32_t>t)
    while True:
        if stop_on_sum:
            if heaps[0].empty() or heaps[1].empty():
                break
            if heaps[0].top_d() + heaps[1].top_d() >= mu:
                break
            act0 = True
            act1 = True
        else:
            act0 = (not heaps[0].empty()) and heaps[0].top_d() < mu
            act1 = (not heaps[1].empty()) and heaps[1].top_d() < mu
            if not act0 and not act1:
                break
        cur = act0 if side == 0 else act1
        if not cur:
            side ^= 1
        other = side ^ 1
        me = &sides[side]
        op = &sides[other]
        d = heaps[side].top_d()
        x = heaps[side].top_x()
        heaps[side].pop()
        if me.fin[x] == e or d != me.d[x]:
            side ^= 1
            continue
        me.fin[x] = e
        settled += 1
        if op.st[x] == e and d + op.d[x] < mu:
            mu = d + op.d[x]
        for i in range(me.off[x], me.off[x + 1]):
            y = me.tgt[i]
            nd = d + me.w[i]
            if me.st[y] != e or nd < me.d[y]:
                me.st[y] = e
                me.d[y] = nd
                heaps[side].push(nd, y)
                if op.st[y] == e and nd + op.d[y] < mu:
                    mu = nd + op.d[y]
        side ^= 1
    return (-1 if mu == SPOCH_VMAX else mu), settled


cdef Side _side(cnp.ndarray off, cnp.ndarray tgt, cnp.ndarray w, int32_t* st, int32_t* fin, int64_t* d) except *:
    cdef Side s
    s.off = <int64_t*>_ptr(off, np.int64)
    s.tgt = <int32_t*>_ptr(tgt, np.int32)
    s.w = <int64_t*>_ptr(w, np.int64)
    s.st = st
    s.fin = fin
    s.d = d
    return s


def bidir_dijkstra(cnp.ndarray out_off, cnp.ndarray out_tgt, cnp.ndarray out_w,
                   cnp.ndarray in_off, cnp.ndarray in_src, cnp.ndarray in_w, int64_t s, int64_t t):
    cdef int64_t n = out_off.shape[0] - 1
    cdef Scratch sc = Scratch(n, 1)
    cdef vector[TS] ts = _thread_scratch(sc, 1)
    cdef Side sides[2]
    cdef SpochHeap heaps[2]
    sides[0] = _side(out_off, out_tgt, out_w, ts[0].st_out, ts[0].st_dij, ts[0].w_out)
    sides[1] = _side(in_off, in_src, in_w, ts[0].st_in, ts[0].st_set, ts[0].w_in)
    cdef (int64_t, int64_t) r
    with nogil:
        r = _bidir(sides, 1, s, t, True, heaps)
    return int(r[0]), int(r[1])


def ch_query(cnp.ndarray up_off, cnp.ndarray up_tgt, cnp.ndarray up_w,
             cnp.ndarray dn_off, cnp.ndarray dn_tgt, cnp.ndarray dn_w,
             int64_t s, int64_t t, bint exhaust=False, Scratch scratch=None):
    cdef int64_t n = up_off.shape[0] - 1
    if scratch is None:
        scratch = Scratch(n, 1)
    cdef vector[TS] ts = _thread_scratch(scratch, 1)
    cdef Side sides[2]
    cdef SpochHeap heaps[2]
    cdef (int64_t, int64_t) r
    cdef TS* t0 = &ts[0]
    begin_item(t0)
    cdef int32_t e = bump(t0)
    sides[0] = _side(up_off, up_tgt, up_w, t0.st_out, t0.st_dij, t0.w_out)
    sides[1] = _side(dn_off, dn_tgt, dn_w, t0.st_in, t0.st_set, t0.w_in)
    if exhaust:
        r = _exhaust(sides, e, s, t, heaps)
    else:
        with nogil:
            r = _bidir(sides, e, s, t, False, heaps)
    _save_epochs(scratch, ts)
    return int(r[0]), int(r[1])


cdef (int64_t, int64_t) _exhaust(Side* sides, int32_t e, int64_t s, int64_t t, SpochHeap* heaps) noexcept nogil:
    cdef int64_t mu = SPOCH_VMAX, settled = 0, d, nd, i
    cdef int32_t x, y
    cdef int k
    cdef Side* me
    if s == t:
        return 0, 0
    for k in range(2):
        me = &sides[k]
        heaps[k].clear()
        x = <int32_t>(s if k == 0 else t)
        me.st[x] = e
        me.d[x] = 0
        heaps[k].push(0, x)
        while not heaps[k].empty():
            d = heaps[k].top_d()
            x = heaps[k].top_x()
            heaps[k].pop()
            if me.fin[x] == e or d != me.d[x]:
                continue
            me.fin[x] = e
            settled += 1
            if k == 1 and sides[0].fin[x] == e and sides[0].d[x] + d < mu:
                mu = sides[0].d[x] + d
            for i in range(me.off[x], me.off[x + 1]):
                y = me.tgt[i]
                nd = d + me.w[i]
                if me.st[y] != e or nd < me.d[y]:
                    me.st[y] = e
                    me.d[y] = nd
                    heaps[k].push(nd, y)
    return (-1 if mu == SPOCH_VMAX else mu), settled
