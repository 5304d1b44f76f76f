"""Input graphs: CSR storage with both adjacency directions, file I/O,
synthetic generators and the plain Dijkstra searches used as oracles."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _backend

MAX_VERTICES = 2**31 - 2
MAX_WEIGHT = 2**32 - 1
UNREACHABLE = -1
"""Distance value reported for vertices that cannot be reached."""

SPGR_MAGIC = b"SPGR"
_ARC_DTYPE = np.dtype([("target", "<u4"), ("weight", "<u4")])


class GraphError(ValueError):
    """Invalid graph construction request (empty graph, bad sizes, bad weights)."""


class ParseError(GraphError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Immutable directed graph with positive integer weights.

    Out-arcs of ``u`` are ``out_targets[out_offsets[u]:out_offsets[u+1]]``
    (sorted by target); the in-adjacency is the exact transpose, sorted by
    source. Weights are held as int64 so path sums never overflow.
    """

    n: int
    out_offsets: np.ndarray
    out_targets: np.ndarray
    out_weights: np.ndarray
    in_offsets: np.ndarray
    in_sources: np.ndarray
    in_weights: np.ndarray

    @property
    def m(self) -> int:
        return int(self.out_targets.shape[0])

    @classmethod
    def from_arcs(cls, n: int, sources, targets, weights) -> "WeightedDigraph":
        """Build from parallel arc arrays; drops self-loops and keeps the
        minimum weight of duplicate arcs."""
        n = int(n)
        if n < 0 or n > MAX_VERTICES:
            raise GraphError(f"vertex count {n} out of range")
        src = np.asarray(sources, dtype=np.int64).ravel()
        dst = np.asarray(targets, dtype=np.int64).ravel()
        w = np.asarray(weights, dtype=np.int64).ravel()
        if not (src.shape == dst.shape == w.shape):
            raise GraphError("arc arrays differ in length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphError("arc endpoint out of range")
            if w.min() <= 0:
                raise GraphError("arc weights must be positive")
        keep = src != dst
        src, dst, w = src[keep], dst[keep], w[keep]
        order = np.lexsort((w, dst, src))
        src, dst, w = src[order], dst[order], w[order]
        if src.size:
            first = np.ones(src.size, dtype=bool)
            first[1:] = (src[1:] != src[:-1]) | (dst[1:] != dst[:-1])
            src, dst, w = src[first], dst[first], w[first]
        out_offsets = _offsets(src, n)
        t_order = np.lexsort((src, dst))
        in_offsets = _offsets(dst[t_order], n)
        return cls(
            n=n,
            out_offsets=out_offsets,
            out_targets=dst.astype(np.int32),
            out_weights=w,
            in_offsets=in_offsets,
            in_sources=src[t_order].astype(np.int32),
            in_weights=w[t_order],
        )

    def arcs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (sources, targets, weights) in CSR order."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.out_offsets))
        return src, self.out_targets.astype(np.int64), self.out_weights.copy()

    def transpose(self) -> "WeightedDigraph":
        return WeightedDigraph(
            n=self.n,
            out_offsets=self.in_offsets,
            out_targets=self.in_sources,
            out_weights=self.in_weights,
            in_offsets=self.out_offsets,
            in_sources=self.out_targets,
            in_weights=self.out_weights,
        )

    def out_arcs(self, u: int) -> list[tuple[int, int]]:
        lo, hi = self.out_offsets[u], self.out_offsets[u + 1]
        return list(zip(self.out_targets[lo:hi].tolist(), self.out_weights[lo:hi].tolist()))

    def in_arcs(self, u: int) -> list[tuple[int, int]]:
        lo, hi = self.in_offsets[u], self.in_offsets[u + 1]
        return list(zip(self.in_sources[lo:hi].tolist(), self.in_weights[lo:hi].tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, WeightedDigraph):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("out_offsets", "out_targets", "out_weights",
                      "in_offsets", "in_sources", "in_weights")
        )

    __hash__ = None  # type: ignore[assignment]


def _offsets(sorted_src: np.ndarray, n: int) -> np.ndarray:
    counts = np.bincount(sorted_src, minlength=n) if sorted_src.size else np.zeros(n, np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets


# ---------------------------------------------------------------- file formats

def load_dimacs(path) -> WeightedDigraph:
    """Parse a DIMACS shortest-path ``.gr`` file (1-indexed vertices)."""
    n = m = None
    src: list[int] = []
    dst: list[int] = []
    wts: list[int] = []
    with open(path, "r", encoding="ascii", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line[0] == "c":
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "p":
                if n is not None:
                    raise ParseError("duplicate problem line", lineno)
                if len(parts) != 4 or parts[1] != "sp":
                    raise ParseError("malformed header, expected 'p sp <n> <m>'", lineno)
                try:
                    n, m = int(parts[2]), int(parts[3])
                except ValueError:
                    raise ParseError("malformed header counts", lineno) from None
                if n < 0 or m < 0 or n > MAX_VERTICES:
                    raise ParseError("header counts out of range", lineno)
            elif tag == "a":
                if n is None:
                    raise ParseError("arc before problem line", lineno)
                if len(parts) != 4:
                    raise ParseError("malformed arc line", lineno)
                try:
                    u, v, w = int(parts[1]), int(parts[2]), int(parts[3])
                except ValueError:
                    raise ParseError("non-integer arc field", lineno) from None
                if not (1 <= u <= n and 1 <= v <= n):
                    raise ParseError(f"arc endpoint out of range [1,{n}]", lineno)
                if w <= 0:
                    raise ParseError("arc weight must be positive", lineno)
                if w > MAX_WEIGHT:
                    raise ParseError("arc weight exceeds 32 bits", lineno)
                src.append(u - 1)
                dst.append(v - 1)
                wts.append(w)
            else:
                raise ParseError(f"unknown line type {tag!r}", lineno)
    if n is None:
        raise ParseError("missing problem line")
    if len(src) != m:
        raise ParseError(f"arc count mismatch: header says {m}, found {len(src)}")
    return WeightedDigraph.from_arcs(n, src, dst, wts)


def save_dimacs(g: WeightedDigraph, path, comment: str | None = None) -> None:
    src, dst, w = g.arcs()
    with open(path, "w", encoding="ascii") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"c {line}\n")
        fh.write(f"p sp {g.n} {g.m}\n")
        for a, b, c in zip((src + 1).tolist(), (dst + 1).tolist(), w.tolist()):
            fh.write(f"a {a} {b} {c}\n")


def _write_csr(fh, offsets, targets, weights) -> None:
    fh.write(np.asarray(offsets, dtype="<u8").tobytes())
    arcs = np.empty(len(targets), dtype=_ARC_DTYPE)
    arcs["target"] = targets
    arcs["weight"] = weights
    fh.write(arcs.tobytes())


def save_binary(g: WeightedDigraph, path) -> None:
    """Write the little-endian ``SPGR`` CSR dump."""
    if g.m and int(g.out_weights.max()) > MAX_WEIGHT:
        raise GraphError("weight does not fit the 32-bit binary format")
    with open(path, "wb") as fh:
        fh.write(SPGR_MAGIC)
        fh.write(struct.pack("<QQ", g.n, g.m))
        _write_csr(fh, g.out_offsets, g.out_targets, g.out_weights)
        _write_csr(fh, g.in_offsets, g.in_sources, g.in_weights)


def load_binary(path) -> WeightedDigraph:
    data = Path(path).read_bytes()
    if data[:4] != SPGR_MAGIC:
        raise ParseError("bad magic, not an SPGR file")
    if len(data) < 20:
        raise ParseError("truncated header")
    n, m = struct.unpack_from("<QQ", data, 4)
    pos = 20
    need = 2 * (8 * (n + 1) + 8 * m)
    if len(data) - pos != need:
        raise ParseError(f"file size mismatch: expected {need} payload bytes, got {len(data) - pos}")
    parts = []
    for _ in range(2):
        offsets = np.frombuffer(data, dtype="<u8", count=n + 1, offset=pos).astype(np.int64)
        pos += 8 * (n + 1)
        arcs = np.frombuffer(data, dtype=_ARC_DTYPE, count=m, offset=pos)
        pos += 8 * m
        parts.append((offsets, arcs["target"].astype(np.int32), arcs["weight"].astype(np.int64)))
    (oo, ot, ow), (io, isrc, iw) = parts
    if oo[0] != 0 or oo[-1] != m or np.any(np.diff(oo) < 0):
        raise ParseError("corrupt out-offsets")
    if io[0] != 0 or io[-1] != m or np.any(np.diff(io) < 0):
        raise ParseError("corrupt in-offsets")
    if m and (ow.min() <= 0 or ot.max() >= n or isrc.max() >= n):
        raise ParseError("corrupt arc data")
    return WeightedDigraph(n, oo, ot, ow, io, isrc, iw)


def load_graph(path) -> WeightedDigraph:
    """Load by extension: ``.spgr`` binary, anything else DIMACS text."""
    if str(path).endswith(".spgr"):
        return load_binary(path)
    return load_dimacs(path)


def save_graph(g: WeightedDigraph, path) -> None:
    if str(path).endswith(".spgr"):
        save_binary(g, path)
    else:
        save_dimacs(g, path)


# ---------------------------------------------------------------- generators

def gen_chain(n: int, w_max: int = 32, seed: int = 0, bidirectional: bool = True) -> WeightedDigraph:
    """Path 0-1-...-(n-1) with uniform weights in [1, w_max]."""
    if n < 1:
        raise GraphError("chain needs at least one vertex")
    if w_max < 1:
        raise GraphError("w_max must be >= 1")
    if n > MAX_VERTICES:
        raise GraphError("too many vertices")
    rng = np.random.default_rng(seed)
    w = rng.integers(1, w_max + 1, size=n - 1, dtype=np.int64)
    a = np.arange(n - 1, dtype=np.int64)
    if bidirectional:
        return WeightedDigraph.from_arcs(n, np.concatenate([a, a + 1]),
                                         np.concatenate([a + 1, a]), np.concatenate([w, w]))
    return WeightedDigraph.from_arcs(n, a, a + 1, w)


def gen_grid(rows: int, cols: int, w_max: int = 32, seed: int = 0) -> WeightedDigraph:
    """4-connected grid; each undirected edge gets one weight for both arcs.
    Vertex ``r * cols + c`` sits at row r, column c."""
    if rows < 1 or cols < 1:
        raise GraphError("grid dimensions must be >= 1")
    if w_max < 1:
        raise GraphError("w_max must be >= 1")
    if rows * cols > MAX_VERTICES:
        raise GraphError(f"grid of {rows}x{cols} exceeds {MAX_VERTICES} vertices")
    rng = np.random.default_rng(seed)
    ids = np.arange(rows * cols, dtype=np.int64).reshape(rows, cols)
    a = np.concatenate([ids[:, :-1].ravel(), ids[:-1, :].ravel()])
    b = np.concatenate([ids[:, 1:].ravel(), ids[1:, :].ravel()])
    w = rng.integers(1, w_max + 1, size=a.size, dtype=np.int64)
    return WeightedDigraph.from_arcs(rows * cols, np.concatenate([a, b]),
                                     np.concatenate([b, a]), np.concatenate([w, w]))


def gen_random(n: int, m: int, w_max: int = 32, seed: int = 0, components: int = 1) -> WeightedDigraph:
    """Directed random graph with exactly ``m`` distinct arcs (no self-loops).

    Vertices are split into ``components`` contiguous blocks and arcs are only
    drawn inside a block, so vertices of different blocks are mutually
    unreachable.
    """
    if n < 1:
        raise GraphError("random graph needs at least one vertex")
    if components < 1 or components > n:
        raise GraphError("bad component count")
    bounds = np.linspace(0, n, components + 1).astype(np.int64)
    sizes = np.diff(bounds)
    cap = int(np.sum(sizes * (sizes - 1)))
    if m > cap:
        raise GraphError(f"cannot place {m} distinct arcs")
    rng = np.random.default_rng(seed)
    keys = np.empty(0, dtype=np.int64)
    while keys.size < m:
        k = m - keys.size
        block = rng.integers(0, components, size=2 * k + 16)
        lo, size = bounds[:-1][block], sizes[block]
        u = lo + (rng.random(block.size) * size).astype(np.int64)
        v = lo + (rng.random(block.size) * size).astype(np.int64)
        ok = u != v
        new = (u[ok] * n + v[ok])
        keys = np.concatenate([keys, new])
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
    keys = keys[:m]
    w = rng.integers(1, w_max + 1, size=m, dtype=np.int64)
    return WeightedDigraph.from_arcs(n, keys // n, keys % n, w)


def gen_knn(n: int, k: int = 4, w_max: int = 32, seed: int = 0, components: int = 1) -> WeightedDigraph:
    """Directed k-nearest-neighbor graph of uniform random points in the plane.

    Each vertex gets arcs to its ``k`` nearest points, so ``m == n * k``.
    Weights are Euclidean lengths scaled to integers in [1, w_max]. With
    ``components > 1`` the points are split into contiguous id blocks placed
    in far-apart unit squares, so blocks cannot reach each other (each block
    needs more than ``k`` points).
    """
    from scipy.spatial import cKDTree

    if n < 1 or k < 1:
        raise GraphError("knn graph needs n >= 1 and k >= 1")
    if w_max < 1:
        raise GraphError("w_max must be >= 1")
    bounds = np.linspace(0, n, components + 1).astype(np.int64)
    if components < 1 or np.diff(bounds).min() <= k:
        raise GraphError("every component needs more than k points")
    rng = np.random.default_rng(seed)
    pts = rng.random((n, 2))
    for c in range(components):
        pts[bounds[c]:bounds[c + 1], 0] += 4.0 * c
    dist, idx = cKDTree(pts).query(pts, k=k + 1)
    dist, idx = dist[:, 1:], idx[:, 1:]
    src = np.repeat(np.arange(n, dtype=np.int64), k)
    scale = w_max / max(float(dist.max()), 1e-12)
    w = np.clip(np.ceil(dist.ravel() * scale), 1, w_max).astype(np.int64)
    return WeightedDigraph.from_arcs(n, src, idx.ravel().astype(np.int64), w)


# ---------------------------------------------------------------- oracles

def _check_vertex(g: WeightedDigraph, v: int, name: str) -> int:
    v = int(v)
    if not 0 <= v < g.n:
        raise IndexError(f"{name}={v} out of range [0, {g.n})")
    return v


def dijkstra_search(g: WeightedDigraph, s: int, t: int | None = None):
    """Dijkstra from ``s`` with (distance, vertex id) extraction order.

    With ``t`` given, stops once ``t`` is settled and returns
    ``(distance or None, settled_count)``; otherwise returns the full
    distance array (``UNREACHABLE`` for unreached vertices) and the settled count.
    """
    s = _check_vertex(g, s, "s")
    target = -1 if t is None else _check_vertex(g, t, "t")
    dist, settled = _backend.kernels.dijkstra(g.out_offsets, g.out_targets, g.out_weights, s, target)
    if t is None:
        return dist, settled
    return (None if dist < 0 else int(dist)), settled


def dijkstra_oracle(g: WeightedDigraph, s: int, t: int | None = None):
    """Exact shortest distances from ``s``; ``None`` when ``t`` is unreachable."""
    return dijkstra_search(g, s, t)[0]


def bidirectional_dijkstra(g: WeightedDigraph, s: int, t: int) -> tuple[int | None, int]:
    """Plain bidirectional Dijkstra on the input graph; returns (distance, settled)."""
    s = _check_vertex(g, s, "s")
    t = _check_vertex(g, t, "t")
    d, settled = _backend.kernels.bidir_dijkstra(
        g.out_offsets, g.out_targets, g.out_weights,
        g.in_offsets, g.in_sources, g.in_weights, s, t)
    return (None if d < 0 else int(d)), settled
