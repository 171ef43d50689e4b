"""JIT switch.

Hot kernels are written twice: a numba ``@njit`` loop version and a
vectorized numpy/scipy version. ``USE_NUMBA`` picks which one the public
functions dispatch to. Set ``DATEFIELD_DISABLE_JIT=1`` to force the numpy
path (useful for debugging and for platforms without numba).
"""

import functools
import os

_DISABLED = os.environ.get("DATEFIELD_DISABLE_JIT", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba as nb

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    nb = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED

if HAS_NUMBA:
    njit = functools.partial(nb.njit, cache=True, nogil=True)
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
