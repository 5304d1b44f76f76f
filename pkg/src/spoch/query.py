"""The finished hierarchy: storage, binary format and distance queries.

Vertices are relabeled by rank. ``up`` stores every hierarchy arc ``u -> v``
with ``rank[u] < rank[v]`` at ``rank[u]``; ``down`` stores every arc
``v -> u`` with ``rank[u] < rank[v]`` reversed, also at ``rank[u]``. Both
searches of a query therefore only climb in rank.
"""

from __future__ import annotations

import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _backend
from .graph import WeightedDigraph, dijkstra_oracle

SPCH_MAGIC = b"SPCH"
SPCH_VERSION = 1
_ARC = np.dtype([("target", "<u4"), ("weight", "<u4")])


class FormatError(ValueError):
    """Unreadable or inconsistent hierarchy file."""


@dataclass(eq=False)
class ContractionHierarchy:
    n: int
    rank: np.ndarray
    level: np.ndarray
    up_offsets: np.ndarray
    up_targets: np.ndarray
    up_weights: np.ndarray
    down_offsets: np.ndarray
    down_targets: np.ndarray
    down_weights: np.ndarray
    seed: int = 0
    theta: int = 0
    score_weights: tuple = (1.0, 0.0, 0.0)
    """Kept in memory only; the file format has no field for it."""
    _local: threading.local = field(default_factory=threading.local, repr=False)

    _ARRAYS = ("rank", "level", "up_offsets", "up_targets", "up_weights",
               "down_offsets", "down_targets", "down_weights")

    def __post_init__(self):
        self.rank = np.ascontiguousarray(self.rank, dtype=np.int64)
        self.level = np.ascontiguousarray(self.level, dtype=np.int64)
        for side in ("up", "down"):
            setattr(self, f"{side}_offsets", np.ascontiguousarray(getattr(self, f"{side}_offsets"), dtype=np.int64))
            setattr(self, f"{side}_targets", np.ascontiguousarray(getattr(self, f"{side}_targets"), dtype=np.int32))
            setattr(self, f"{side}_weights", np.ascontiguousarray(getattr(self, f"{side}_weights"), dtype=np.int64))

    @property
    def edge_count(self) -> int:
        return int(self.up_targets.size + self.down_targets.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ContractionHierarchy):
            return NotImplemented
        return (self.n == other.n and self.seed == other.seed and self.theta == other.theta
                and all(np.array_equal(getattr(self, a), getattr(other, a)) for a in self._ARRAYS))

    __hash__ = None  # type: ignore[assignment]

    def arcs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """All hierarchy arcs as (source, target, weight) in original vertex ids."""
        inv = np.empty(self.n, dtype=np.int64)
        inv[self.rank] = np.arange(self.n, dtype=np.int64)
        ups = inv[np.repeat(np.arange(self.n), np.diff(self.up_offsets))]
        upt = inv[self.up_targets]
        dns = inv[self.down_targets]
        dnt = inv[np.repeat(np.arange(self.n), np.diff(self.down_offsets))]
        return (np.concatenate([ups, dns]), np.concatenate([upt, dnt]),
                np.concatenate([self.up_weights, self.down_weights]))

    def check(self) -> None:
        """Raise :class:`FormatError` when a structural invariant is broken."""
        if self.rank.shape != (self.n,) or self.level.shape != (self.n,):
            raise FormatError("rank/level length differs from n")
        seen = np.zeros(self.n, dtype=bool)
        if self.n and (self.rank.min() < 0 or self.rank.max() >= self.n):
            raise FormatError("rank is not a permutation")
        seen[self.rank] = True
        if not seen.all():
            raise FormatError("rank is not a permutation")
        for side in ("up", "down"):
            off, tgt = getattr(self, f"{side}_offsets"), getattr(self, f"{side}_targets")
            if off.shape != (self.n + 1,) or off[0] != 0 or off[-1] != tgt.size or np.any(np.diff(off) < 0):
                raise FormatError(f"corrupt {side} offsets")
            src = np.repeat(np.arange(self.n), np.diff(off))
            if tgt.size and (tgt.max() >= self.n or np.any(tgt <= src)):
                raise FormatError(f"{side} arc does not ascend in rank")
            if getattr(self, f"{side}_weights").size and getattr(self, f"{side}_weights").min() <= 0:
                raise FormatError(f"non-positive {side} weight")

    # ------------------------------------------------------------ queries
    def _scratch(self):
        sc = getattr(self._local, "scratch", None)
        if sc is None:
            sc = self._local.scratch = _backend.kernels.make_query_scratch(self.n)
        return sc

    def query_stats(self, s: int, t: int, exhaust: bool = False) -> tuple[int | None, int]:
        """Distance from ``s`` to ``t`` (None if unreachable) and settled-vertex count."""
        s, t = int(s), int(t)
        if not (0 <= s < self.n and 0 <= t < self.n):
            raise IndexError(f"query ({s}, {t}) out of range [0, {self.n})")
        d, settled = _backend.kernels.ch_query(
            self.up_offsets, self.up_targets, self.up_weights,
            self.down_offsets, self.down_targets, self.down_weights,
            int(self.rank[s]), int(self.rank[t]), exhaust, self._scratch())
        return (None if d < 0 else int(d)), int(settled)

    def query(self, s: int, t: int) -> int | None:
        return self.query_stats(s, t)[0]


def ch_query(ch: ContractionHierarchy, s: int, t: int) -> tuple[int | None, int]:
    return ch.query_stats(s, t)


# ---------------------------------------------------------------- file format

def _pack_csr(off, tgt, w) -> bytes:
    if w.size and int(w.max()) > 0xFFFFFFFF:
        raise FormatError("arc weight does not fit 32 bits")
    arcs = np.empty(tgt.size, dtype=_ARC)
    arcs["target"] = tgt
    arcs["weight"] = w
    return struct.pack("<Q", tgt.size) + off.astype("<u8").tobytes() + arcs.tobytes()


def to_bytes(ch: ContractionHierarchy) -> bytes:
    parts = [SPCH_MAGIC, struct.pack("<IQ", SPCH_VERSION, ch.n),
             ch.rank.astype("<u4").tobytes(), ch.level.astype("<u4").tobytes(),
             _pack_csr(ch.up_offsets, ch.up_targets, ch.up_weights),
             _pack_csr(ch.down_offsets, ch.down_targets, ch.down_weights),
             struct.pack("<QI", ch.seed & 0xFFFFFFFFFFFFFFFF, ch.theta)]
    return b"".join(parts)


def from_bytes(data: bytes) -> ContractionHierarchy:
    if data[:4] != SPCH_MAGIC:
        raise FormatError("bad magic, not an SPCH file")
    pos = 4

    def take(nbytes: int) -> int:
        nonlocal pos
        if pos + nbytes > len(data):
            raise FormatError("truncated file")
        start = pos
        pos += nbytes
        return start

    version, n = struct.unpack_from("<IQ", data, take(12))
    if version != SPCH_VERSION:
        raise FormatError(f"unsupported version {version}")
    rank = np.frombuffer(data, "<u4", n, take(4 * n)).astype(np.int64)
    level = np.frombuffer(data, "<u4", n, take(4 * n)).astype(np.int64)
    csr = []
    for _ in range(2):
        (m,) = struct.unpack_from("<Q", data, take(8))
        off = np.frombuffer(data, "<u8", n + 1, take(8 * (n + 1))).astype(np.int64)
        if m > len(data):
            raise FormatError("truncated file")
        arcs = np.frombuffer(data, _ARC, m, take(8 * m))
        csr.append((off, arcs["target"].astype(np.int32), arcs["weight"].astype(np.int64)))
    seed, theta = struct.unpack_from("<QI", data, take(12))
    if pos != len(data):
        raise FormatError("trailing bytes after hierarchy")
    (uo, ut, uw), (do, dt, dw) = csr
    ch = ContractionHierarchy(n=int(n), rank=rank, level=level, up_offsets=uo, up_targets=ut, up_weights=uw,
                              down_offsets=do, down_targets=dt, down_weights=dw, seed=int(seed), theta=int(theta))
    ch.check()
    return ch


def serialize(ch: ContractionHierarchy, path) -> None:
    Path(path).write_bytes(to_bytes(ch))


def deserialize(path) -> ContractionHierarchy:
    return from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------- batches

@dataclass
class QueryReport:
    count: int
    mean_us: float
    p50_us: float
    p99_us: float
    mean_settled: float
    distances: list
    mismatches: int | None = None
    first_mismatch: tuple | None = None

    def summary(self) -> dict:
        out = {k: getattr(self, k) for k in ("count", "mean_us", "p50_us", "p99_us", "mean_settled")}
        if self.mismatches is not None:
            out["mismatches"] = self.mismatches
        return out


def batch_query(ch: ContractionHierarchy, pairs, oracle: WeightedDigraph | None = None) -> QueryReport:
    """Run every pair, timing each query; compare against Dijkstra on ``oracle`` if given."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if not pairs.shape[0]:
        raise ValueError("no query pairs")
    if pairs.min() < 0 or pairs.max() >= ch.n:
        bad = pairs[np.any((pairs < 0) | (pairs >= ch.n), axis=1)][0]
        raise IndexError(f"pair ({bad[0]}, {bad[1]}) out of range [0, {ch.n})")
    times = np.empty(pairs.shape[0])
    settled = np.empty(pairs.shape[0])
    dists = []
    for i, (s, t) in enumerate(pairs.tolist()):
        t0 = time.perf_counter()
        d, k = ch.query_stats(s, t)
        times[i] = time.perf_counter() - t0
        settled[i] = k
        dists.append(d)
    report = QueryReport(count=len(dists), mean_us=float(times.mean() * 1e6),
                         p50_us=float(np.percentile(times, 50) * 1e6),
                         p99_us=float(np.percentile(times, 99) * 1e6),
                         mean_settled=float(settled.mean()), distances=dists)
    if oracle is not None:
        report.mismatches = 0
        for (s, t), d in zip(pairs.tolist(), dists):
            want = dijkstra_oracle(oracle, s, t)
            if want != d:
                report.mismatches += 1
                if report.first_mismatch is None:
                    report.first_mismatch = (s, t, d, want)
    return report


def random_pairs(n: int, count: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, n, size=(int(count), 2), dtype=np.int64)


def read_pairs(path) -> np.ndarray:
    """Read a text file of ``s t`` lines (0-indexed); ``#`` starts a comment."""
    rows = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected 's t'")
            try:
                rows.append((int(parts[0]), int(parts[1])))
            except ValueError:
                raise ValueError(f"line {lineno}: non-integer vertex") from None
    return np.array(rows, dtype=np.int64).reshape(-1, 2)
