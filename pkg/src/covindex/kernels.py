"""Kernel backend selection: compiled extension if built, NumPy otherwise.

Set ``COVINDEX_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by tests that compare the two backends).
"""

from __future__ import annotations

import os

if os.environ.get("COVINDEX_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

COMPILED: bool = _impl.COMPILED
block_norms = _impl.block_norms
norms = _impl.norms
qcyl_margins = _impl.qcyl_margins


def backend_name() -> str:
    return "compiled" if COMPILED else "numpy"
