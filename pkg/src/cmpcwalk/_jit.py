"""Optional numba acceleration.

Set ``CMPCWALK_DISABLE_NUMBA=1`` to run every kernel as plain numpy/Python.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None

DISABLED = os.environ.get("CMPCWALK_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
USE_NUMBA = numba is not None and not DISABLED


def njit(func):
    """Compile ``func`` with numba when enabled, otherwise return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    return func
