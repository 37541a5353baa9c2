"""Kernel backend selection.

The compiled extension is preferred when importable; the pure numpy/scipy
twin is used otherwise.  Set SPECTSUP_PURE=1 in the environment to force the
pure backend (useful for benchmarking and for debugging the extension).
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("SPECTSUP_PURE"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

em_sweep = _impl.em_sweep
siddon_build = _impl.siddon_build


def active_backend():
    """Name of the kernel backend in use: 'compiled' or 'pure'."""
    return "pure" if _impl is _kernels_py else "compiled"


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
        return True
    except ImportError:
        return False
