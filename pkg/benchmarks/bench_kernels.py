"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from qbmbattery._kernels import _fallback
from qbmbattery.gaussian import husimi_coefficients

try:
    from qbmbattery._kernels import _core
except ImportError:
    _core = None


def hermite_case(dim):
    # squeezed, displaced thermal state
    r = 0.6
    cov = 0.5 * (1 + 2 * 1.5) * np.diag([np.exp(-2 * r), np.exp(2 * r)])
    g, B, _ = husimi_coefficients(np.array([2.0, -1.0]), cov)
    args = (complex(g[0]), complex(g[1]), complex(B[0, 0]), complex(B[0, 1]), complex(B[1, 1]), dim)
    return lambda impl: impl.hermite_grid(*args)


def runs_case(n):
    rng = np.random.default_rng(0)
    diffs = np.ascontiguousarray(rng.normal(size=n))
    return lambda impl: impl.positive_runs(diffs, 1e-6)


def best(fn, impl, repeat):
    return min(timeit.repeat(lambda: fn(impl), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = [(f"hermite_grid dim={d}", hermite_case(d)) for d in (50, 150, 300)]
    cases += [(f"positive_runs n={n}", runs_case(n)) for n in (10_000, 1_000_000)]
    print(f"{'kernel':<28}{'python [ms]':>14}{'cython [ms]':>14}{'speedup':>10}")
    for name, fn in cases:
        t_py = best(fn, _fallback, args.repeat) * 1e3
        if _core is None:
            print(f"{name:<28}{t_py:>14.3f}{'n/a':>14}{'':>10}")
            continue
        t_c = best(fn, _core, args.repeat) * 1e3
        print(f"{name:<28}{t_py:>14.3f}{t_c:>14.3f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
