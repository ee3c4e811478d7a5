"""Numba switch.

Set ``FRONTHAUL_MIMO_NUMBA=0`` in the environment to force the pure-numpy
kernels. The flag is read once, at import time.
"""
import os

try:
    import numba
    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

ENABLE_NUMBA = HAS_NUMBA and os.environ.get("FRONTHAUL_MIMO_NUMBA", "1").strip().lower() not in (
    "0", "false", "no", "off")
CACHE_NUMBA = True


def njit(func):
    """Compile ``func`` in nopython mode if numba is installed, else return it unchanged."""
    if HAS_NUMBA:
        return numba.njit(cache=CACHE_NUMBA)(func)
    return func
