"""Kernel backend switch.

Hot kernels exist twice: a loop version compiled with numba and a vectorised
numpy version. ``OPENQSL_NO_NUMBA=1`` (or a missing numba install) selects the
numpy versions everywhere.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("OPENQSL_NO_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)


def njit(func):
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
