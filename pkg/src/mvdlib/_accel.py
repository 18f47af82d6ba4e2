"""Numba switch for the hot kernels.

Set ``MVDLIB_DISABLE_NUMBA=1`` before import to force the pure-numpy paths.
"""
import os

_disabled = os.environ.get("MVDLIB_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAVE_NUMBA = False


def njit(fn):
    """Compile ``fn`` with numba when available, else return it untouched."""
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def use_numba() -> bool:
    return HAVE_NUMBA
