"""Pure-Python/numpy versions of the compiled kernels.

Used when the extension is not built or when ``QBMBATTERY_PURE_PYTHON`` is set.
"""

import numpy as np


def hermite_grid(g0, g1, b00, b01, b11, dim):
    """Renormalized coefficients ``G[m, n]`` of ``exp(z^T B z / 2 + g^T z)`` in ``z0^m z1^n / sqrt(m! n!)``."""
    G = np.zeros((dim, dim), dtype=np.complex128)
    if dim <= 0:
        return G
    sq = np.sqrt(np.arange(dim + 1, dtype=float))
    G[0, 0] = 1.0
    for n in range(dim - 1):
        G[0, n + 1] = (g1 * G[0, n] + (b11 * sq[n] * G[0, n - 1] if n else 0.0)) / sq[n + 1]
    for m in range(dim - 1):
        nxt = g0 * G[m]
        if m:
            nxt = nxt + b00 * sq[m] * G[m - 1]
        nxt[1:] += b01 * sq[1:dim] * G[m, :-1]
        G[m + 1] = nxt / sq[m + 1]
    return G


def positive_runs(diffs, floor):
    """Maximal runs of positive increments, merged across single sub-floor dips."""
    diffs = np.asarray(diffs, dtype=float)
    n = len(diffs)
    runs = []
    i = 0
    while i < n:
        if diffs[i] > 0.0:
            start = i
            rise = 0.0
            while i < n and diffs[i] > 0.0:
                rise += diffs[i]
                i += 1
            if runs and start == runs[-1][1] + 1 and -diffs[start - 1] < floor:
                runs[-1][1] = i
                runs[-1][2] += rise
            else:
                runs.append([start, i, rise])
        else:
            i += 1
    runs = [r for r in runs if r[2] > floor]
    starts = np.array([r[0] for r in runs], dtype=np.intp)
    ends = np.array([r[1] for r in runs], dtype=np.intp)
    rises = np.array([r[2] for r in runs], dtype=float)
    return starts, ends, rises
