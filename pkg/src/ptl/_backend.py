"""Backend selection for the hot loops.

``PTL_BACKEND=numpy`` forces the pure-numpy implementations; the default is
numba when it imports cleanly.
"""
import os

_requested = os.environ.get("PTL_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"PTL_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency
    _numba = None
    HAVE_NUMBA = False

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` with the package defaults, or a no-op without numba."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)
