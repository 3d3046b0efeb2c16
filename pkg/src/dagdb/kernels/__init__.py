"""Numerical kernels: compiled fast path with a pure NumPy fallback.

The compiled module is used when its build succeeded; set
``DAGDB_PURE_PYTHON=1`` to force the fallback.  Both backends implement the
same algorithms with the same tie rules, so results agree to rounding
(orderings exactly).
"""

import os

from dagdb.kernels import _ref

if os.environ.get("DAGDB_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _ref
    BACKEND = "python"
else:
    try:
        from dagdb.kernels import _fast as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _ref
        BACKEND = "python"

TAYLOR_TERMS = _ref.TAYLOR_TERMS
expm_trace = _impl.expm_trace
gfas_order = _impl.gfas_order

__all__ = ["BACKEND", "TAYLOR_TERMS", "expm_trace", "gfas_order"]
