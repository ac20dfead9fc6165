"""Kernel selection: the compiled extension when built, else the Python fallback.

Set ``SPINPROBE_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("SPINPROBE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
else:
    _impl = _kernels_py

sector_states = _impl.sector_states
xxz_coo = _impl.xxz_coo

__all__ = ["BACKEND", "sector_states", "xxz_coo"]
