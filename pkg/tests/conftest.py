import numpy as np
import pytest

from qbmbattery._kernels import _fallback

try:
    from qbmbattery._kernels import _core
except ImportError:  # extension not built
    _core = None

KERNEL_IMPLS = [pytest.param(_fallback, id="python")]
KERNEL_IMPLS.append(
    pytest.param(_core, id="cython", marks=pytest.mark.skipif(_core is None, reason="extension not built"))
)


@pytest.fixture(params=KERNEL_IMPLS)
def kernels(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_state(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim):
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
