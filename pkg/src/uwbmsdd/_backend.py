"""Kernel backend selection.

The compiled extension (uwbmsdd._sdkernel) is preferred when importable;
otherwise the pure-Python kernels (uwbmsdd._sdpy) take over with identical
behaviour. Set UWBMSDD_FORCE_PY=1 to force the fallback, e.g. for the
backend-parity tests and the benchmark.
"""

from __future__ import annotations

import os

from . import _sdpy

if os.environ.get("UWBMSDD_FORCE_PY", "") not in ("", "0"):
    kernels = _sdpy
else:
    try:
        from . import _sdkernel as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _sdpy


def kernel_backend() -> str:
    """Name of the active kernel backend: 'cython' or 'python'."""
    return kernels.BACKEND
