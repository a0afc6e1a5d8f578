"""Numba switch.

Hot kernels are written once as plain loops over numpy arrays. When numba is
importable and ``TOPOHOUGH_NUMBA`` is not set to a false value they are
compiled with ``njit``; otherwise the vectorised numpy / interpreted
fallbacks are used.
"""
import os

_FALSY = {"0", "false", "no", "off"}

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("TOPOHOUGH_NUMBA", "1").strip().lower() not in _FALSY


def njit(func):
    """Compile ``func`` in nopython mode if numba is available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
