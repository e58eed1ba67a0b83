"""Backend switch for the compiled kernels.

Set ``CKNLAB_DISABLE_NUMBA=1`` (or numba's own ``NUMBA_DISABLE_JIT=1``) before
import to force the pure-numpy code paths.
"""
import os

_FLAG_VALUES = {"1", "true", "yes", "on"}


def _env_disabled():
    for name in ("CKNLAB_DISABLE_NUMBA", "NUMBA_DISABLE_JIT"):
        if os.environ.get(name, "").strip().lower() in _FLAG_VALUES:
            return True
    return False


try:
    if _env_disabled():
        raise ImportError("numba disabled by environment")
    import numba

    njit = numba.njit(cache=True, nogil=True)
    HAVE_NUMBA = True
except ImportError:
    numba = None
    njit = None
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"
