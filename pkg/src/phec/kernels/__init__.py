"""Kernel backend selection.

Prefers the compiled Cython extension; falls back to the numpy
implementation when the extension is unavailable. Set PHEC_PURE_PYTHON=1
to force the fallback (used by the benchmark and the backend tests).
"""

import os

from . import pure

if os.environ.get("PHEC_PURE_PYTHON"):
    _backend = pure
else:
    try:
        from . import _core as _backend
    except ImportError:
        _backend = pure

BACKEND = _backend.NAME
best_gini_split = _backend.best_gini_split
knn_query = _backend.knn_query

__all__ = ["BACKEND", "best_gini_split", "knn_query", "pure"]
