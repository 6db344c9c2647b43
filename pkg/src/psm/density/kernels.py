"""Kernel backend selection.

Prefers the compiled extension; falls back to numpy when the extension
was not built.  PSM_KERNEL_BACKEND=python forces the fallback (used by
the backend-parity tests and the benchmark).
"""

from __future__ import annotations

import os

from psm.density import _kernels_py

_requested = os.environ.get("PSM_KERNEL_BACKEND", "auto")

if _requested not in ("auto", "python", "cython"):
    raise ValueError(f"PSM_KERNEL_BACKEND must be auto|python|cython, got {_requested!r}")

if _requested == "python":
    BACKEND = "python"
    component_logpdf = _kernels_py.component_logpdf
else:
    try:
        from psm import _ckernels

        BACKEND = "cython"
        component_logpdf = _ckernels.component_logpdf
    except ImportError:
        if _requested == "cython":
            raise
        BACKEND = "python"
        component_logpdf = _kernels_py.component_logpdf
