"""Backend selection for the hot numeric kernels.

Kernels are written twice: an explicit-loop version compiled with numba and a
vectorised pure-numpy version. The active backend is picked once at import
from ``UNIFIED_QSL_BACKEND`` (``numba`` or ``numpy``) and can be switched at
runtime with :func:`set_backend`. ``NUMBA_DISABLE_JIT`` or a missing numba
install forces the numpy path, since uncompiled loop kernels are unusably slow.
"""

from __future__ import annotations

import os

try:
    if os.environ.get("NUMBA_DISABLE_JIT", "0") not in ("", "0"):
        raise ImportError
    import numba

    HAVE_NUMBA = True

    def njit(func):
        return numba.njit(cache=True, nogil=True)(func)

except ImportError:
    HAVE_NUMBA = False

    def njit(func):
        return func


_VALID = ("numba", "numpy")


def _initial_backend() -> str:
    requested = os.environ.get("UNIFIED_QSL_BACKEND", "").strip().lower()
    if requested and requested not in _VALID:
        raise ValueError(f"UNIFIED_QSL_BACKEND must be one of {_VALID}, got {requested!r}")
    if requested == "numpy" or not HAVE_NUMBA:
        return "numpy"
    return "numba"


_backend = _initial_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Switch the kernel backend; returns the previous one."""
    global _backend
    name = name.lower()
    if name not in _VALID:
        raise ValueError(f"backend must be one of {_VALID}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is unavailable")
    previous, _backend = _backend, name
    return previous
