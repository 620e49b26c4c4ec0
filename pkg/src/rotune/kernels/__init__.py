"""Batch kernels behind the sweep, oracle and measurement hot loops.

The compiled extension is used when it imports; otherwise, or when the
``ROTUNE_PURE_PYTHON`` environment variable is set to a non-empty value
other than ``0``, the pure-Python module is used. Both expose the same
four functions with identical results.
"""

import importlib
import os

__all__ = [
    "BACKEND",
    "available_backends",
    "count_windows",
    "get_backend",
    "min_safe_index",
    "slowest_ro_grid",
    "stress_grid",
]

_MODULES = {"cython": "._ckernels", "python": "._pykernels"}


def get_backend(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name not in _MODULES:
        raise ValueError(f"unknown kernel backend {name!r}")
    return importlib.import_module(_MODULES[name], __name__)


def available_backends():
    names = []
    for name in _MODULES:
        try:
            get_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("ROTUNE_PURE_PYTHON", "") not in ("", "0"):
        return "python", get_backend("python")
    try:
        return "cython", get_backend("cython")
    except ImportError:
        return "python", get_backend("python")


BACKEND, _impl = _select()

slowest_ro_grid = _impl.slowest_ro_grid
stress_grid = _impl.stress_grid
min_safe_index = _impl.min_safe_index
count_windows = _impl.count_windows
