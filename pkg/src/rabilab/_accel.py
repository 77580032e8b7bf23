"""Backend switch for the compiled kernels.

Hot loops are written twice: a numba ``@njit`` kernel and a pure-numpy
fallback. Numba is used when importable unless ``RABILAB_DISABLE_NUMBA`` is
set to a truthy value. Tests and benchmarks flip :data:`USE_NUMBA` directly.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False
    _njit = None

USE_NUMBA = HAVE_NUMBA and os.environ.get("RABILAB_DISABLE_NUMBA", "").strip().lower() in _FALSEY


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise return the function unchanged."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return _njit(*args, **kwargs)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
