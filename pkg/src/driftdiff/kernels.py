"""Backend selection for the hot loops.

The compiled extension is used when it imports; setting
``DRIFTDIFF_PURE_PYTHON=1`` forces the numpy fallback.
"""

import importlib
import os

from . import _kernels_py

_FORCE_PY = os.environ.get("DRIFTDIFF_PURE_PYTHON", "").strip() not in ("", "0")

try:
    if _FORCE_PY:
        raise ImportError("pure-python backend requested")
    _impl = importlib.import_module("driftdiff._kernels")
    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def get_backend(name=None):
    """Return a kernel module by name (``"cython"`` or ``"python"``).

    ``None`` returns the active backend. Raises ImportError when the
    extension was requested but is not built.
    """
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        return importlib.import_module("driftdiff._kernels")
    raise ValueError(f"unknown backend {name!r}")


def compiled_available():
    try:
        importlib.import_module("driftdiff._kernels")
    except ImportError:
        return False
    return True


apply_stencil = _impl.apply_stencil
evolve = _impl.evolve
walk = _impl.walk
fft_axis = _impl.fft_axis
