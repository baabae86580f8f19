import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import minimize_scalar

from qbmbattery.bath import (
    BathSpec,
    CouplingForm,
    ModelParams,
    build_total_hamiltonian,
    coupling_operator,
    default_bath_dim,
    discretize_bath,
    quadratic_form,
    spectral_density,
    thermal_covariance,
    thermal_occupation,
    thermal_state_fock,
)
from qbmbattery.errors import DimensionMismatchError, InvalidDimensionError, InvalidParameterError
from qbmbattery.fock_dynamics import FockEvolution
from qbmbattery.gaussian import coherent_moments, initial_joint_state
from qbmbattery.hilbert import DensityMatrix, coherent_state, fock_moments, quadratures, tensor


class TestSpectralDensity:
    spec = BathSpec(eta=0.3, cutoff=2.0, omega_max=8.0)

    def test_zero_at_origin(self):
        assert spectral_density(0.0, self.spec) == 0

    def test_value_at_cutoff(self):
        assert spectral_density(2.0, self.spec) == pytest.approx(0.3 * 2.0 / np.e)

    def test_peak_at_cutoff(self):
        res = minimize_scalar(lambda w: -spectral_density(w, self.spec), bounds=(0, 8), method="bounded",
                              options={"xatol": 1e-10})
        assert res.x == pytest.approx(2.0, abs=1e-5)


class TestDiscretization:
    def test_decoupled(self):
        _, c = discretize_bath(BathSpec(eta=0.0, n_modes=5))
        assert np.all(c == 0)

    def test_single_mode(self):
        w, c = discretize_bath(BathSpec(n_modes=1, eta=1.0, cutoff=1.0, omega_max=1.0))
        assert w[0] == 1.0 and c[0] ** 2 == pytest.approx(2 / np.pi * np.exp(-1))

    def test_eta_scaling_exact(self):
        _, c1 = discretize_bath(BathSpec(eta=0.1, n_modes=30))
        _, c2 = discretize_bath(BathSpec(eta=0.2, n_modes=30))
        assert np.allclose(c2**2, 2 * c1**2, rtol=1e-14, atol=0)

    def test_correlation_function_converges_to_continuum(self):
        spec = BathSpec(n_modes=400)
        w, c = discretize_bath(spec)
        ts = np.linspace(0, 10, 41)
        discrete = np.array([np.sum(c**2 / (2 * w) * np.cos(w * t)) for t in ts])
        continuum = np.array([quad(lambda x: spectral_density(x, spec) / np.pi * np.cos(x * t), 0, spec.omega_max,
                                   limit=400)[0] for t in ts])
        assert np.max(np.abs(discrete - continuum)) <= 0.01 * np.max(np.abs(continuum))

    @pytest.mark.parametrize("kw", [dict(n_modes=0), dict(eta=-1), dict(cutoff=0), dict(omega_max=1, cutoff=2)])
    def test_invalid_spec(self, kw):
        with pytest.raises(InvalidParameterError):
            BathSpec(**kw)


class TestCoupling:
    def test_position_only_at_mu0(self):
        p = ModelParams(mu=0.0)
        q, _ = quadratures(6, p.m, p.omega_s)
        assert np.allclose(coupling_operator(p, 6).matrix, q.matrix)

    def test_forms_agree_at_zero(self):
        a = coupling_operator(ModelParams(mu=0.0), 8).matrix
        b = coupling_operator(ModelParams(mu=0.0, form=CouplingForm.CONVEX), 8).matrix
        assert np.array_equal(a, b)

    def test_pure_momentum_at_mu_tilde_one(self):
        p = ModelParams(mu=1.0, form="mu_tilde")
        _, mom = quadratures(6, p.m, p.omega_s)
        assert np.allclose(coupling_operator(p, 6).matrix, mom.matrix)

    def test_subtractive_form(self):
        p = ModelParams(mu=0.4)
        q, mom = quadratures(5, p.m, p.omega_s)
        assert np.allclose(coupling_operator(p, 5).matrix, q.matrix - 0.4 * mom.matrix)
        assert coupling_operator(p, 5).is_hermitian()

    def test_convex_range(self):
        with pytest.raises(InvalidParameterError):
            ModelParams(mu=1.2, form="mu_tilde")

    @pytest.mark.parametrize("kw", [dict(m=0), dict(omega_s=-1), dict(T=-0.1), dict(mu=-0.5)])
    def test_invalid_params(self, kw):
        with pytest.raises(InvalidParameterError):
            ModelParams(**kw)


class TestTotalHamiltonian:
    def test_decoupled_spectrum(self):
        p = ModelParams(bath=BathSpec(n_modes=2, eta=0.0))
        dims = (5, 4, 3)
        H = build_total_hamiltonian(p, dims)
        w, _ = discretize_bath(p.bath)
        freqs = np.array([p.omega_s, *w])
        # every level, the top ones included, sits at the oscillator energy
        levels = np.array(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")).reshape(3, -1).T
        expected = levels @ freqs + 0.5 * freqs.sum()
        assert np.allclose(np.real(np.diag(H.matrix)), expected, atol=1e-12)
        assert np.allclose(H.matrix, np.diag(np.diag(H.matrix)))

    def test_truncation_does_not_trap_population(self):
        # a lowered top level would soak up population within a few periods
        p = ModelParams(T=0.3, bath=BathSpec(n_modes=2, cutoff=4.0, omega_max=4.0, eta=0.2))
        evo = FockEvolution(thermal_state_fock(p.omega_s, 0.3, 6), p, (6, 4, 4))
        tops = max(evo.reduced_state(t)[1][1:].max() for t in np.linspace(0, 10, 21))
        assert tops < 5e-4

    def test_decoupled_two_levels_is_diagonal(self):
        p = ModelParams(bath=BathSpec(n_modes=1, eta=0.0, cutoff=1.0, omega_max=1.0))
        H = build_total_hamiltonian(p, (2, 2)).matrix
        assert np.allclose(H, np.diag(np.diag(H)))

    def test_hermitian_for_random_params(self, rng):
        for _ in range(5):
            p = ModelParams(m=rng.uniform(0.5, 2), mu=rng.uniform(0, 1), T=rng.uniform(0, 2),
                            bath=BathSpec(n_modes=2, eta=rng.uniform(0, 0.5)))
            H = build_total_hamiltonian(p, (4, 3, 3))
            assert H.hermiticity_error() <= 1e-12

    def test_dims_length_checked(self):
        with pytest.raises(DimensionMismatchError):
            build_total_hamiltonian(ModelParams(bath=BathSpec(n_modes=2)), (4, 3))

    def test_dims_at_least_two(self):
        with pytest.raises(InvalidDimensionError):
            build_total_hamiltonian(ModelParams(bath=BathSpec(n_modes=1)), (4, 1))


class TestQuadraticForm:
    def test_layout(self):
        p = ModelParams(mu=0.3, bath=BathSpec(n_modes=3))
        M = quadratic_form(p).M
        w, c = discretize_bath(p.bath)
        assert np.allclose(M, M.T, atol=1e-12)
        assert M[0, 0] == pytest.approx(p.m * p.omega_s**2) and M[1, 1] == pytest.approx(1 / p.m)
        assert np.allclose(M[[2, 4, 6], [2, 4, 6]], w**2) and np.allclose(M[[3, 5, 7], [3, 5, 7]], 1)
        assert np.allclose(M[0, [2, 4, 6]], c) and np.allclose(M[1, [2, 4, 6]], -0.3 * c)
        assert np.all(M[:, [3, 5, 7]][[0, 1]] == 0)

    def test_block_diagonal_when_decoupled(self):
        M = quadratic_form(ModelParams(bath=BathSpec(n_modes=3, eta=0.0))).M
        mask = np.kron(np.eye(4), np.ones((2, 2))) == 0
        assert np.all(M[mask] == 0)

    def test_no_momentum_coupling_at_mu0(self):
        M = quadratic_form(ModelParams(mu=0.0, bath=BathSpec(n_modes=3))).M
        assert np.all(M[1, 2:] == 0)

    def test_energy_matches_fock_expectation(self):
        p = ModelParams(mu=0.4, T=0.7, bath=BathSpec(n_modes=2, eta=0.3))
        dims = (30, 12, 9)
        alpha = 0.6 - 0.3j
        H = build_total_hamiltonian(p, dims)
        w, _ = discretize_bath(p.bath)
        rho = tensor([coherent_state(alpha, dims[0])] + [thermal_state_fock(wk, p.T, d) for wk, d in zip(w, dims[1:])])
        fock_energy = np.real(np.trace(rho.matrix @ H.matrix))
        g = initial_joint_state(p, *coherent_moments(alpha))
        gauss_energy = quadratic_form(p).to_dimensionless().energy(g.mean, g.cov)
        assert fock_energy == pytest.approx(gauss_energy, abs=1e-6)

    def test_dimensionless_form_is_physical_form_in_scaled_coordinates(self):
        p = ModelParams(mu=0.2, bath=BathSpec(n_modes=2))
        f = quadratic_form(p)
        x = np.arange(1.0, 7.0)
        assert (f.scales * x) @ f.M @ (f.scales * x) == pytest.approx(x @ f.to_dimensionless().M @ x)


class TestThermal:
    def test_zero_temperature_ground_state(self):
        assert np.allclose(thermal_state_fock(1.0, 0.0, 5).matrix, np.diag([1, 0, 0, 0, 0]))

    def test_boltzmann_ratio(self):
        pops = np.real(np.diag(thermal_state_fock(1.3, 0.8, 6).matrix))
        assert pops[1] / pops[0] == pytest.approx(np.exp(-1.3 / 0.8))

    def test_bose_einstein_occupation(self):
        w, T = 1.0, 1.5
        dim = default_bath_dim(w, T, top_population=1e-9)
        rho = thermal_state_fock(w, T, dim)
        assert np.real(rho.matrix[-1, -1]) < 1e-9
        n_mean = np.real(np.trace(rho.matrix @ np.diag(np.arange(dim))))
        assert n_mean == pytest.approx(1 / np.expm1(w / T), abs=1e-6)

    def test_covariance_vacuum(self):
        assert np.allclose(thermal_covariance(2.0, 0.0), np.eye(2) / 2)

    def test_covariance_matches_fock_moments(self):
        w, T = 0.9, 1.2
        _, cov = fock_moments(thermal_state_fock(w, T, 200))
        assert np.allclose(cov, thermal_covariance(w, T), atol=1e-10)
        assert thermal_covariance(w, T)[0, 0] == pytest.approx(thermal_occupation(w, T) + 0.5)

    def test_equipartition(self):
        assert thermal_covariance(0.01, 10.0)[0, 0] == pytest.approx(1000.0, rel=1e-5)

    def test_valid_state(self):
        DensityMatrix(thermal_state_fock(1.0, 2.0, 10).matrix).check()
