"""Phase-concurrent open-addressing hash map with write-min combining.

Keys are 64-bit integers. Within one phase only one kind of operation runs
(all inserts, all lookups or all deletes); the batch methods execute such a
phase on ``threads`` OpenMP threads. Inserting an existing key keeps the
smaller value, so the content after an insert phase does not depend on the
interleaving.

Two probing modes exist. A plain map probes on the whole key. A grouped map
(``probe_high=True``) probes on the upper 32 bits only, so every entry
sharing a group id ``g`` lives in the probe run that starts at ``home(g)``
and :meth:`probe_group` can enumerate them. The overlay graph stores its
shortcut buffer this way with key ``(source << 32) | target``.
"""

from __future__ import annotations

import numpy as np

from . import _backend
from ._pykernels import EMPTY, TOMBSTONE, VALUE_MAX, home_slot

__all__ = ["PhaseConcurrentMap", "CapacityError", "pack", "unpack", "EMPTY", "TOMBSTONE"]


class CapacityError(RuntimeError):
    """Raised when an insert wraps around a full table."""


def pack(hi, lo) -> np.ndarray:
    """Pack two vertex ids into one uint64 key (hi in the upper half)."""
    return (np.asarray(hi, dtype=np.uint64) << np.uint64(32)) | np.asarray(lo, dtype=np.uint64)


def unpack(keys) -> tuple[np.ndarray, np.ndarray]:
    keys = np.asarray(keys, dtype=np.uint64)
    return (keys >> np.uint64(32)).astype(np.int64), (keys & np.uint64(0xFFFFFFFF)).astype(np.int64)


def _pow2(x: int) -> int:
    return 1 << max(4, int(x - 1).bit_length())


class PhaseConcurrentMap:
    """Fixed-capacity linear-probing map (capacity rounded up to a power of two).

    ``used`` counts slots that are no longer empty (live entries plus
    tombstones); deleted slots are never reclaimed before :meth:`drain`.
    """

    def __init__(self, capacity: int, seed: int = 0, probe_high: bool = False, backend: str | None = None):
        cap = _pow2(max(1, int(capacity)))
        self.keys = np.full(cap, EMPTY, dtype=np.uint64)
        self.vals = np.full(cap, VALUE_MAX, dtype=np.int64)
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.probe_high = bool(probe_high)
        self.used = 0
        self._k = _backend.get(backend)

    @property
    def capacity(self) -> int:
        return int(self.keys.shape[0])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.keys < TOMBSTONE))

    def home(self, probe_key: int) -> int:
        return home_slot(int(probe_key), self.seed, self.capacity - 1)

    # --------------------------------------------------------- insert phase
    def insert_min_many(self, keys, values, threads: int = 1) -> int:
        """Insert phase: ``map[k] = min(map[k], v)`` for every pair.

        Returns the number of newly claimed slots.
        """
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        values = np.ascontiguousarray(values, dtype=np.int64)
        if keys.shape != values.shape:
            raise ValueError("keys and values differ in length")
        if keys.size and keys.max() >= TOMBSTONE:
            raise ValueError("reserved key value")
        claimed, failed = self._k.map_insert_min(self.keys, self.vals, self.seed, self.probe_high,
                                                  keys, values, threads)
        self.used += claimed
        if failed:
            raise CapacityError(f"hash table full ({self.capacity} slots, {failed} inserts failed)")
        return claimed

    def insert_min(self, key: int, value: int) -> None:
        self.insert_min_many([key], [value])

    # --------------------------------------------------------- lookup phase
    def lookup_many(self, keys, threads: int = 1) -> np.ndarray:
        """Lookup phase; absent keys map to -1 (stored values are positive)."""
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        return self._k.map_lookup(self.keys, self.vals, self.seed, self.probe_high, keys, threads)

    def lookup(self, key: int) -> int | None:
        v = int(self.lookup_many([key])[0])
        return None if v < 0 else v

    def __contains__(self, key: int) -> bool:
        return self.lookup(key) is not None

    def probe_group(self, group: int) -> list[tuple[int, int]]:
        """All live entries ``(low 32 bits of key, value)`` whose group id is ``group``."""
        if not self.probe_high:
            raise ValueError("probe_group needs a grouped map")
        lo, vals = self._k.map_probe_group(self.keys, self.vals, self.seed, int(group))
        return list(zip(lo.tolist(), vals.tolist()))

    # --------------------------------------------------------- delete phase
    def delete_many(self, keys, threads: int = 1) -> int:
        keys = np.ascontiguousarray(keys, dtype=np.uint64)
        return self._k.map_delete(self.keys, self.vals, self.seed, self.probe_high, keys, threads)

    def delete(self, key: int) -> None:
        self.delete_many([key])

    # --------------------------------------------------------- quiescent
    def estimate_load(self, samples: int, rng: np.random.Generator) -> float:
        """Fraction of randomly sampled slots that are not empty."""
        if samples <= 0:
            raise ValueError("samples must be positive")
        pos = rng.integers(0, self.capacity, size=int(samples))
        return float(np.count_nonzero(self.keys[pos] != EMPTY)) / samples

    def drain(self) -> tuple[np.ndarray, np.ndarray]:
        """Return all live (key, value) pairs sorted by key and empty the table."""
        live = self.keys < TOMBSTONE
        keys, vals = self.keys[live], self.vals[live]
        order = np.argsort(keys, kind="stable")
        self.clear()
        return keys[order], vals[order]

    def clear(self) -> None:
        self.keys.fill(EMPTY)
        self.vals.fill(VALUE_MAX)
        self.used = 0

    def items(self) -> dict[int, int]:
        live = self.keys < TOMBSTONE
        return dict(zip(self.keys[live].tolist(), self.vals[live].tolist()))
