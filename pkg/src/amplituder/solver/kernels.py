"""Kernel backend selection.

The compiled extension is used when it imports; setting
``AMPLITUDER_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("AMPLITUDER_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

etd_stage = _impl.etd_stage
etd_correct = _impl.etd_correct
etd_stage_diag = _impl.etd_stage_diag
etd_correct_diag = _impl.etd_correct_diag
poly_eval = _impl.poly_eval


def backends() -> dict:
    """All importable backends by name."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
