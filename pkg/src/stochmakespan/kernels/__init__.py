"""Hot loops with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time.  Set ``STOCHMAKESPAN_NO_NUMBA=1``
to force the numpy path (numba is also skipped when it is not installed).
Both backends share signatures and consume caller-drawn random numbers, so a
fixed seed selects the same tasks on either path.
"""
from __future__ import annotations

import os

from . import _numpy as numpy_backend

try:
    from . import _numba as numba_backend
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba_backend = None

_disabled = os.environ.get("STOCHMAKESPAN_NO_NUMBA", "").strip().lower() in {"1", "true", "yes"}
NUMBA_ENABLED = numba_backend is not None and not _disabled
backend = numba_backend if NUMBA_ENABLED else numpy_backend

greedy_coverage = backend.greedy_coverage
sample_max_loads = backend.sample_max_loads
exact_expected_max = backend.exact_expected_max
tree_round = backend.tree_round
lattice_masks = backend.lattice_masks
point_masks = backend.point_masks

__all__ = [
    "NUMBA_ENABLED",
    "backend",
    "numpy_backend",
    "numba_backend",
    "greedy_coverage",
    "sample_max_loads",
    "exact_expected_max",
    "tree_round",
    "lattice_masks",
    "point_masks",
]
