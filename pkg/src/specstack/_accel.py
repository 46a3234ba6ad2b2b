"""Backend selection for the numeric kernels.

Every hot kernel has two implementations: a numba ``@njit`` loop and a
vectorised numpy fallback. The numba path is used when numba imports and
``SPECSTACK_DISABLE_NUMBA`` is unset (or ``0``). ``set_backend`` switches at
runtime, which the benchmark and the backend-parity tests rely on.
"""

import os
import warnings
from contextlib import contextmanager

# an outdated system TBB is skipped by numba; the fallback layers are fine
warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

try:
    import numba
    from numba import njit, prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn

    prange = range


def _env_disabled():
    return os.environ.get("SPECSTACK_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")


_backend = "numba" if HAVE_NUMBA and not _env_disabled() else "numpy"


def backend():
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return _backend


def set_backend(name):
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    _backend = name


def use_numba():
    return _backend == "numba"


@contextmanager
def using_backend(name):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def available_backends():
    return ("numba", "numpy") if HAVE_NUMBA else ("numpy",)
