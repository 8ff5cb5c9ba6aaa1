"""Backend selection for the compiled kernels.

Set ``PTGAME_DISABLE_NUMBA=1`` to force the pure-numpy path even when numba is installed.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
NUMBA_DISABLED = os.environ.get("PTGAME_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
DEFAULT_BACKEND = "numba" if HAVE_NUMBA and not NUMBA_DISABLED else "numpy"


def njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def resolve_backend(backend):
    backend = backend or DEFAULT_BACKEND
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend
