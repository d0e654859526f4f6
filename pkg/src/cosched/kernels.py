"""Backend selection for the search kernels.

The compiled module is used when importable; setting ``COSCHED_PURE_PYTHON=1``
forces the pure-Python fallback.
"""

import os
from types import SimpleNamespace

from . import _pykernels

_NAMES = ("bnb_search", "greedy_search", "column_value")


def _namespace(mod, name):
    return SimpleNamespace(name=name, **{k: getattr(mod, k) for k in _NAMES})


python_backend = _namespace(_pykernels, "python")

try:
    from . import _ckernels
except ImportError:  # extension not built
    cython_backend = None
else:
    cython_backend = _namespace(_ckernels, "cython")

if cython_backend is not None and not os.environ.get("COSCHED_PURE_PYTHON"):
    active = cython_backend
else:
    active = python_backend

BACKEND = active.name


def get_backend(name=None):
    if name is None:
        return active
    if name == "python":
        return python_backend
    if name == "cython":
        if cython_backend is None:
            raise ImportError("compiled kernels are not built")
        return cython_backend
    raise ValueError(f"unknown kernel backend {name!r}")
