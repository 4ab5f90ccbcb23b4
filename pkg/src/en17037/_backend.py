"""Selection between the numba kernels and the pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``EN17037_DISABLE_NUMBA`` is unset or falsy.  Tests and the
benchmark switch at runtime with :func:`set_backend`.
"""
from __future__ import annotations

import os
from contextlib import contextmanager

ENV_FLAG = "EN17037_DISABLE_NUMBA"

try:
    import numba

    # the bundled TBB is often too old; probing it only produces a warning
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAS_NUMBA = False


def _env_disabled() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")


_current = "numba" if HAS_NUMBA and not _env_disabled() else "numpy"


def get_backend() -> str:
    return _current


def set_backend(name: str) -> None:
    global _current
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAS_NUMBA:
        raise RuntimeError("numba is not installed")
    _current = name


@contextmanager
def use_backend(name: str):
    previous = _current
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def kernels():
    """Module implementing ``nearest_group`` for the active backend."""
    if _current == "numba":
        from .geometry import _kernels_numba as k
    else:
        from .geometry import _kernels_numpy as k
    return k


def set_num_threads(n: int) -> None:
    if HAS_NUMBA:
        import numba

        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
