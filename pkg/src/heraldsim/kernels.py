"""Kernel backend selection.

The compiled extension is used when it imports; otherwise the pure-Python
reference loops are used. Set ``HERALDSIM_PURE_PYTHON=1`` to force the
fallback.
"""
import os

from . import _kernels_py as python_backend

compiled_backend = None
if not os.environ.get("HERALDSIM_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend

BACKEND = "cython" if compiled_backend is not None else "python"

coincidence_mask = _active.coincidence_mask
dead_time_filter = _active.dead_time_filter
merge_gates = _active.merge_gates

__all__ = [
    "BACKEND",
    "coincidence_mask",
    "compiled_backend",
    "dead_time_filter",
    "merge_gates",
    "python_backend",
]
