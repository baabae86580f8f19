import numpy as np
import pytest

from conftest import random_state
from qbmbattery.bath import BathSpec, ModelParams, discretize_bath, thermal_state_fock
from qbmbattery.errors import CapacityError, DimensionMismatchError, TruncationOverflowError
from qbmbattery.fock_dynamics import FockEvolution, default_system_dim, purity, simulate_reduced, smallest_dim
from qbmbattery.gaussian import coherent_moments, simulate_gaussian
from qbmbattery.hilbert import DensityMatrix, coherent_state, coherent_vector, fock_embed, tensor, trace_distance
from qbmbattery.trajectory import Trajectory


def small_params(**kw):
    bath = dict(n_modes=2, eta=0.2, cutoff=2.0, omega_max=4.0)
    bath.update({k: kw.pop(k) for k in list(kw) if k in BathSpec.__dataclass_fields__})
    return ModelParams(bath=BathSpec(**bath), **kw)


class TestFreeEvolution:
    def test_populations_fixed_and_coherences_rotate(self, rng):
        p = small_params(eta=0.0, T=0.5)
        d = 8
        rho0 = np.zeros((d, d), complex)
        rho0[:5, :5] = random_state(rng, 5)
        times = np.linspace(0, 3, 7)
        traj = simulate_reduced(rho0, p, (d, 4, 4), times)
        n = np.arange(d)
        for t, rho in zip(times, traj.states):
            phase = np.exp(-1j * p.omega_s * (n[:, None] - n[None, :]) * t)
            assert np.allclose(rho.matrix, rho0 * phase, atol=1e-12)

    def test_matches_gaussian_backend_when_decoupled(self):
        p = small_params(eta=0.0, T=1.0)
        alpha = 0.8 + 0.3j
        psi = coherent_vector(alpha, 30)
        times = np.linspace(0, 6, 13)
        fock = simulate_reduced(DensityMatrix.from_vector(psi), p, (30, 8, 5), times)
        gauss = simulate_gaussian(*coherent_moments(alpha), p, times)
        for a, b in zip(fock.states, gauss.fock_states(dim=30)):
            n = max(a.shape[0], b.shape[0])
            assert trace_distance(fock_embed(a, n), fock_embed(b, n)) <= 1e-8


def test_initial_state_reproduced():
    p = small_params(mu=0.5, T=0.7)
    rho0 = coherent_state(0.4j, 10)
    traj = simulate_reduced(rho0, p, (10, 5, 4), [0.0, 0.5])
    assert np.allclose(traj.states[0].matrix, rho0.matrix, atol=1e-12)


def test_cross_backend_small_bath():
    p = ModelParams(mu=0.5, T=0.5, bath=BathSpec(n_modes=1, eta=0.1, cutoff=1.0, omega_max=1.5))
    alpha = 0.5
    times = np.linspace(0, 5, 11)
    dims = (16, 8)
    fock = simulate_reduced(coherent_state(alpha, 16), p, dims, times)
    gauss = simulate_gaussian(*coherent_moments(alpha), p, times)
    for a, b in zip(fock.states, gauss.fock_states(tol=1e-12)):
        n = max(a.shape[0], b.shape[0])
        assert trace_distance(fock_embed(a, n), fock_embed(b, n)) <= 1e-3


class TestUnitarity:
    p = small_params(mu=0.6, T=0.8)
    dims = (8, 5, 4)

    def evolution(self, rng):
        return FockEvolution(DensityMatrix(fock_embed(random_state(rng, 3), 8)), self.p, self.dims)

    def test_joint_spectrum_invariant(self, rng):
        evo = self.evolution(rng)
        ref = np.linalg.eigvalsh(evo.joint_state(0.0).matrix)
        for t in (0.7, 3.1):
            assert np.allclose(np.linalg.eigvalsh(evo.joint_state(t).matrix), ref, atol=1e-10)

    def test_energy_conserved(self, rng):
        evo = self.evolution(rng)
        H = evo.H.matrix
        e0 = np.real(np.trace(evo.joint_state(0.0).matrix @ H))
        for t in (1.0, 4.0, 9.0):
            e = np.real(np.trace(evo.joint_state(t).matrix @ H))
            assert abs(e - e0) <= 1e-8 * abs(e0)

    def test_initial_joint_state_is_product(self, rng):
        rho_s = random_state(rng, 3)
        evo = FockEvolution(DensityMatrix(fock_embed(rho_s, 8)), self.p, self.dims, component_tol=0.0)
        w, _ = discretize_bath(self.p.bath)
        expected = tensor([DensityMatrix(fock_embed(rho_s, 8))] +
                          [thermal_state_fock(wk, self.p.T, d) for wk, d in zip(w, self.dims[1:])])
        assert np.allclose(evo.joint_state(0.0).matrix, expected.matrix, atol=1e-12)


def test_component_budget_bounds_the_error():
    p = small_params(mu=0.4, T=1.0)
    rho0 = thermal_state_fock(p.omega_s, 1.0, 8)
    exact = FockEvolution(rho0, p, (8, 5, 4), component_tol=0.0)
    tol = 1e-4
    cut = FockEvolution(rho0, p, (8, 5, 4), component_tol=tol)
    assert cut.n_components < exact.n_components
    assert 0 < cut.discarded_weight <= tol
    for t in (0.0, 1.5, 6.0):
        assert trace_distance(cut.reduced_state(t)[0], exact.reduced_state(t)[0]) <= 2 * tol


def test_contractive(rng):
    p = small_params(mu=0.3, T=0.4, eta=0.3)
    times = np.linspace(0, 8, 33)
    a = simulate_reduced(fock_embed(random_state(rng, 2), 9), p, (9, 7, 5), times)
    b = simulate_reduced(fock_embed(random_state(rng, 2), 9), p, (9, 7, 5), times)
    D = [trace_distance(x, y) for x, y in zip(a.states, b.states)]
    assert max(D) <= D[0] + 1e-10


def test_reduced_states_are_valid():
    traj = simulate_reduced(coherent_state(0.6, 14), small_params(mu=1.0, T=1.0), (14, 10, 6), np.linspace(0, 4, 9))
    for rho in traj.states:
        rho.check()


def test_overflow_is_an_error():
    p = small_params(eta=2.0, T=1.0)
    with pytest.raises(TruncationOverflowError) as info:
        simulate_reduced(coherent_state(1.0, 4), p, (4, 2, 2), np.linspace(0, 5, 11))
    assert info.value.mode is not None and info.value.population > 1e-4


def test_capacity_error():
    p = small_params()
    with pytest.raises(CapacityError) as info:
        simulate_reduced(coherent_state(0.1, 40), p, (40, 30, 30), [0.0], max_joint_dim=1000)
    assert info.value.required == 36000 and info.value.available == 1000
    assert "gaussian" in str(info.value)


def test_dims_must_cover_all_modes():
    with pytest.raises(DimensionMismatchError):
        simulate_reduced(coherent_state(0.1, 5), small_params(), (5, 3), [0.0])


class TestPurity:
    def test_pure(self):
        assert purity(coherent_state(0.3, 10)) == pytest.approx(1)

    def test_maximally_mixed(self):
        assert purity(np.eye(5) / 5) == pytest.approx(0.2)

    def test_product(self, rng):
        a, b = random_state(rng, 3), random_state(rng, 2)
        assert purity(np.kron(a, b)) == pytest.approx(purity(a) * purity(b))


def test_truncation_rules():
    pops = np.abs(coherent_vector(1.0, 40)) ** 2
    d = smallest_dim(pops, 1e-8)
    assert pops[d - 1] < 1e-8 <= pops[d - 2]
    with pytest.raises(TruncationOverflowError):
        smallest_dim(np.full(5, 0.2), 1e-3)
    assert default_system_dim(pops, ModelParams(T=1.0)) >= default_system_dim(pops, ModelParams(T=0.0))


def test_trajectory_validates_grid():
    from qbmbattery.errors import PreconditionError

    with pytest.raises(PreconditionError):
        Trajectory([0.1, 0.2], ModelParams())
    with pytest.raises(PreconditionError):
        Trajectory([0.0, 0.2, 0.2], ModelParams())
