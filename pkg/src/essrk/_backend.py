"""Backend selection for the compiled kernels.

``ESSRK_BACKEND=numpy`` forces the pure-numpy path. Anything else (or unset)
uses numba when it can be imported.
"""
import os
import warnings

_requested = os.environ.get("ESSRK_BACKEND", "numba").strip().lower()

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

    def njit(*args, **kw):
        if len(args) == 1 and callable(args[0]) and not kw:
            return args[0]
        return lambda f: f

    if _requested == "numba":
        warnings.warn("numba is not installed; falling back to the numpy backend")

if _requested not in ("numba", "numpy"):
    raise ValueError(f"ESSRK_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

USE_NUMBA = HAVE_NUMBA and _requested == "numba"
NJIT_OPTS = {"cache": True, "fastmath": False}


def use_numba():
    return USE_NUMBA


def set_backend(name):
    """Switch backends at runtime (mostly for tests and benchmarks)."""
    global USE_NUMBA
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not available")
    USE_NUMBA = name == "numba"
