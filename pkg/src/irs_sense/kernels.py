"""Selects the compiled coordinate-ascent kernel, falling back to pure Python.

Set ``IRS_SENSE_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("IRS_SENSE_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]

        _impl = _compiled
        BACKEND = "compiled"
    except ImportError:  # pragma: no cover - depends on the build
        pass

coordinate_ascent = _impl.coordinate_ascent
objective = _impl.objective
best_phase = _impl.best_phase
refine_exact = _impl.refine_exact

__all__ = ["coordinate_ascent", "objective", "best_phase", "refine_exact", "BACKEND"]
