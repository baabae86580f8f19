import numpy as np
import pytest
from scipy.special import gammaln

from qbmbattery._kernels import _fallback, positive_runs


def series_reference(g, B, dim):
    # brute-force Taylor coefficients of exp(z^T B z / 2 + g^T z), renormalized by sqrt(m! n!)
    out = np.zeros((dim, dim), dtype=complex)
    # exp(B00 z0^2/2) exp(B11 z1^2/2) exp(B01 z0 z1) exp(g0 z0) exp(g1 z1): convolve the five series
    from math import factorial

    for m in range(dim):
        for n in range(dim):
            acc = 0j
            for k in range(min(m, n) + 1):  # power of z0 z1 from the cross term
                for i in range(0, m - k + 1, 2):  # power of z0 from B00
                    for j in range(0, n - k + 1, 2):  # power of z1 from B11
                        p0, p1 = m - k - i, n - k - j
                        acc += (B[0, 1] ** k / factorial(k) * (B[0, 0] / 2) ** (i // 2) / factorial(i // 2)
                                * (B[1, 1] / 2) ** (j // 2) / factorial(j // 2)
                                * g[0] ** p0 / factorial(p0) * g[1] ** p1 / factorial(p1))
            out[m, n] = acc * np.exp(0.5 * (gammaln(m + 1) + gammaln(n + 1)))
    return out


@pytest.mark.parametrize("seed", range(4))
def test_hermite_grid_matches_power_series(kernels, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=2) + 1j * rng.normal(size=2)
    b = 0.5 * (rng.normal(size=3) + 1j * rng.normal(size=3))
    B = np.array([[b[0], b[1]], [b[1], b[2]]])
    got = kernels.hermite_grid(g[0], g[1], b[0], b[1], b[2], 9)
    assert np.allclose(got, series_reference(g, B, 9), atol=1e-12)


def test_hermite_grid_coherent_and_thermal(kernels):
    # B = 0: G[m, n] = g0^m g1^n / sqrt(m! n!)
    g0, g1 = 0.8 - 0.6j, 0.8 + 0.6j
    G = kernels.hermite_grid(g0, g1, 0, 0, 0, 40)
    m = np.arange(40)
    ref = np.exp(m[:, None] * np.log(g0) + m[None, :] * np.log(g1) - 0.5 * (gammaln(m + 1)[:, None] + gammaln(m + 1)[None, :]))
    assert np.allclose(G, ref, atol=1e-13)
    # pure cross term: diagonal q^n
    G = kernels.hermite_grid(0, 0, 0, 0.7, 0, 60)
    assert np.allclose(G, np.diag(0.7 ** np.arange(60)), atol=1e-14)


def test_hermite_grid_empty(kernels):
    assert kernels.hermite_grid(0, 0, 0, 0, 0, 0).shape == (0, 0)


def test_kernel_implementations_agree():
    from qbmbattery._kernels import _core

    from qbmbattery.gaussian import husimi_coefficients

    rng = np.random.default_rng(5)
    for _ in range(5):
        # coefficients of physical states keep the grid bounded
        A = rng.normal(size=(2, 2))
        cov = 0.5 * np.eye(2) + A @ A.T
        g, B, _ = husimi_coefficients(rng.normal(scale=3, size=2), cov)
        c = (g[0], g[1], B[0, 0], B[0, 1], B[1, 1])
        assert np.allclose(_core.hermite_grid(*c, 150), _fallback.hermite_grid(*c, 150), atol=1e-13, rtol=0)
    diffs = rng.normal(scale=1e-3, size=500)
    for a, b in zip(_core.positive_runs(diffs, 1e-4), _fallback.positive_runs(diffs, 1e-4)):
        assert np.allclose(a, b)


def test_positive_runs_merges_shallow_single_dips(kernels):
    diffs = np.array([0.1, 0.1, -1e-9, 0.1, -0.5, 0.2])
    starts, ends, rises = kernels.positive_runs(diffs, 1e-6)
    assert starts.tolist() == [0, 5]
    assert ends.tolist() == [4, 6]
    assert np.allclose(rises, [0.3, 0.2])


def test_positive_runs_drops_sub_floor_rises(kernels):
    starts, _, _ = kernels.positive_runs(np.array([-1.0, 1e-9, -1.0]), 1e-6)
    assert len(starts) == 0


def test_wrapper_accepts_lists():
    starts, ends, rises = positive_runs([1.0, -1.0, 2.0], 1e-6)
    assert starts.tolist() == [0, 2] and np.allclose(rises, [1, 2])
