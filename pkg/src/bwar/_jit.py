"""Optional numba acceleration.

Set ``BWAR_DISABLE_NUMBA=1`` to run every kernel as plain Python over numpy
arrays. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("BWAR_DISABLE_NUMBA", "").strip().lower()
DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_ENABLED = numba is not None and not DISABLED


def njit(fn):
    if NUMBA_ENABLED:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if NUMBA_ENABLED else "python"
