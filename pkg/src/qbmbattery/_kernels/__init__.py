"""Hot inner loops, compiled when available.

The Cython extension ``_core`` is preferred; the numpy fallback is used when it
is missing or when the environment variable ``QBMBATTERY_PURE_PYTHON`` is set
to a non-empty value. ``BACKEND`` reports which one was picked.
"""

import os

import numpy as np

from . import _fallback

if os.environ.get("QBMBATTERY_PURE_PYTHON"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

_hermite_grid = _impl.hermite_grid
_positive_runs = _impl.positive_runs


def hermite_grid(g0, g1, b00, b01, b11, dim):
    return _hermite_grid(complex(g0), complex(g1), complex(b00), complex(b01), complex(b11), int(dim))


def positive_runs(diffs, floor):
    return _positive_runs(np.ascontiguousarray(diffs, dtype=np.float64), float(floor))


__all__ = ["BACKEND", "hermite_grid", "positive_runs"]
