"""Optional numba acceleration.

Set ``TOARRIVAL_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels.  Without numba installed the numpy kernels are used as well.
"""
import os



def _disabled_by_env():
    return os.environ.get("TOARRIVAL_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


_disabled = _disabled_by_env()

try:
    if _disabled:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA
