"""Kernel backend selection.

The hot numeric kernels exist twice: a numba ``@njit`` build and a pure-numpy
build. ``CONCEPTSCOPE_BACKEND`` picks one:

    auto   use numba when importable, numpy otherwise (default)
    numba  require numba, fail loudly if missing
    numpy  force the pure-numpy path

The flag is read once at import. Both builds implement the same math; results
are deterministic within a backend (fixed seeds give bit-identical runs) but
may differ across backends in the last ulp because summation order differs.
"""

import os

try:
    import numba  # noqa: F401
    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False

_VALID = ("auto", "numba", "numpy")


def _resolve(flag: str) -> str:
    if flag not in _VALID:
        raise ValueError(f"CONCEPTSCOPE_BACKEND must be one of {_VALID}, got {flag!r}")
    if flag == "numba" and not HAS_NUMBA:
        raise ImportError("CONCEPTSCOPE_BACKEND=numba but numba is not installed")
    if flag == "auto":
        return "numba" if HAS_NUMBA else "numpy"
    return flag


BACKEND = _resolve(os.environ.get("CONCEPTSCOPE_BACKEND", "auto"))


def active_backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND
