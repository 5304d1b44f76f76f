"""Kernel backend selection.

The compiled OpenMP core (``spoch._core``) is used when it imports; otherwise
the pure-Python kernels take over. ``SPOCH_BACKEND=python`` forces the
fallback, ``SPOCH_BACKEND=cython`` makes a missing core an import error.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover - depends on the build
    _core = None

_choice = os.environ.get("SPOCH_BACKEND", "").strip().lower()
if _choice == "cython" and _core is None:
    raise ImportError("SPOCH_BACKEND=cython but the compiled core is not built")

kernels: ModuleType = _pykernels if (_choice == "python" or _core is None) else _core
name: str = "python" if kernels is _pykernels else "cython"


def available() -> list[str]:
    return ["cython", "python"] if _core is not None else ["python"]


def get(backend: str | None = None) -> ModuleType:
    """Return the kernel module for ``backend`` (default: the selected one)."""
    if backend is None:
        return kernels
    if backend == "python":
        return _pykernels
    if backend == "cython":
        if _core is None:
            raise RuntimeError("compiled core is not available")
        return _core
    raise ValueError(f"unknown backend {backend!r}")


def max_threads() -> int:
    return kernels.max_threads()
