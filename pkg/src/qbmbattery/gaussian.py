"""Exact Gaussian backend.

The total Hamiltonian is quadratic, so Gaussian inputs stay Gaussian. States are
tracked as (mean, covariance) over dimensionless quadratures
``(x, y, x_1, y_1, ...)`` with vacuum covariance ``I/2``.

The bridge back to Fock space (:func:`gaussian_to_fock`) reads the matrix
elements of a one-mode state off the power series of its Husimi function.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._kernels import hermite_grid
from .bath import ModelParams, QuadraticForm, discretize_bath, quadratic_form, thermal_covariance
from .errors import DimensionMismatchError, PreconditionError, TruncationOverflowError
from .fock_dynamics import smallest_dim
from .hilbert import DensityMatrix
from .trajectory import Trajectory, check_grid

PHYSICAL_ATOL = 1e-9


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def is_physical(cov, atol: float = PHYSICAL_ATOL) -> bool:
    """``cov + (i/2) Omega`` is positive semidefinite within ``atol``."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    lo = np.linalg.eigvalsh(cov + 0.5j * symplectic_form(n))[0]
    return bool(lo >= -atol)


def symplectic_eigenvalues(cov) -> np.ndarray:
    """Ascending symplectic eigenvalues of a covariance matrix."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * symplectic_form(n) @ cov))
    return np.sort(ev)[::2]


@dataclass
class GaussianState:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.cov = np.asarray(self.cov, dtype=float)
        n = len(self.mean)
        if n % 2 or self.cov.shape != (n, n):
            raise DimensionMismatchError(f"mean of length {n} and covariance {self.cov.shape} do not match")

    @property
    def n_modes(self) -> int:
        return len(self.mean) // 2

    def check(self, atol: float = PHYSICAL_ATOL) -> "GaussianState":
        if np.max(np.abs(self.cov - self.cov.T)) > 1e-12 * max(1.0, np.max(np.abs(self.cov))):
            raise PreconditionError("covariance is not symmetric")
        if not is_physical(self.cov, atol):
            raise PreconditionError("covariance violates the uncertainty principle")
        return self

    def purity(self) -> float:
        # tr(rho^2) = 1 / sqrt(det(2 cov))
        return float(1.0 / np.sqrt(np.linalg.det(2.0 * self.cov)))


@dataclass
class SymplecticPropagator:
    S: np.ndarray

    def symplecticity_error(self) -> float:
        om = symplectic_form(self.S.shape[0] // 2)
        return float(np.max(np.abs(self.S @ om @ self.S.T - om)))


class GaussianPropagator:
    """``exp(Omega M t)`` for every ``t`` from one decomposition of ``Omega M``.

    For positive-definite ``M = L L^T`` the generator is similar to the real
    antisymmetric ``L^T Omega L``, whose Hermitian eigendecomposition is stable.
    Otherwise each ``t`` falls back to scaling-and-squaring.
    """

    def __init__(self, form: QuadraticForm):
        M = np.asarray(form.M, dtype=float)
        self.size = M.shape[0]
        self.omega = symplectic_form(self.size // 2)
        self.generator = self.omega @ M
        try:
            L = np.linalg.cholesky(M)
        except np.linalg.LinAlgError:
            self.stable = False
            return
        self.stable = True
        A = L.T @ self.omega @ L
        lam, U = np.linalg.eigh(-1j * A)
        self._lam = lam
        self._left = sla.solve_triangular(L.T, U, lower=False)
        self._right = U.conj().T @ L.T

    def matrix(self, t: float) -> np.ndarray:
        if not self.stable:
            return sla.expm(self.generator * t)
        return np.real((self._left * np.exp(1j * self._lam * t)) @ self._right)

    def rows(self, t: float, rows=slice(0, 2)) -> np.ndarray:
        if not self.stable:
            return self.matrix(t)[rows]
        return np.real((self._left[rows] * np.exp(1j * self._lam * t)) @ self._right)


def symplectic_propagator(form: QuadraticForm, t: float) -> SymplecticPropagator:
    return SymplecticPropagator(GaussianPropagator(form).matrix(t))


def evolve_gaussian(g0: GaussianState, S: SymplecticPropagator) -> GaussianState:
    S = S.S if isinstance(S, SymplecticPropagator) else np.asarray(S)
    if S.shape[0] != len(g0.mean):
        raise DimensionMismatchError(f"propagator side {S.shape[0]} vs state size {len(g0.mean)}")
    return GaussianState(S @ g0.mean, S @ g0.cov @ S.T)


def reduce_to_system(g: GaussianState) -> tuple[np.ndarray, np.ndarray]:
    return g.mean[:2].copy(), g.cov[:2, :2].copy()


def coherent_moments(alpha: complex) -> tuple[np.ndarray, np.ndarray]:
    alpha = complex(alpha)
    return np.sqrt(2.0) * np.array([alpha.real, alpha.imag]), 0.5 * np.eye(2)


def initial_joint_state(params: ModelParams, mean_sys, cov_sys) -> GaussianState:
    """Battery moments times the thermal bath, dimensionless convention."""
    omegas, _ = discretize_bath(params.bath)
    n = len(omegas)
    mean = np.zeros(2 * (n + 1))
    mean[:2] = mean_sys
    cov = np.zeros((2 * (n + 1), 2 * (n + 1)))
    cov[:2, :2] = cov_sys
    for k, w in enumerate(omegas):
        i = 2 + 2 * k
        cov[i : i + 2, i : i + 2] = thermal_covariance(w, params.T)
    return GaussianState(mean, cov)


def simulate_gaussian(mean_sys, cov_sys, params: ModelParams, times) -> Trajectory:
    """Reduced battery moments on a grid; only the battery rows of the propagator are formed."""
    times = np.asarray(times, dtype=float)
    check_grid(times)
    mean_sys = np.asarray(mean_sys, dtype=float)
    cov_sys = np.asarray(cov_sys, dtype=float)
    if not is_physical(cov_sys):
        raise PreconditionError("initial battery covariance is unphysical")
    g0 = initial_joint_state(params, mean_sys, cov_sys)
    prop = GaussianPropagator(quadratic_form(params).to_dimensionless())
    bath_var = np.diag(g0.cov)[2:]
    means = np.empty((len(times), 2))
    covs = np.empty((len(times), 2, 2))
    for i, t in enumerate(times):
        S2 = prop.rows(t)
        Ss, Sb = S2[:, :2], S2[:, 2:]
        means[i] = Ss @ mean_sys
        c = Ss @ cov_sys @ Ss.T + (Sb * bath_var) @ Sb.T
        covs[i] = 0.5 * (c + c.T)
    return Trajectory(times, params, means=means, covs=covs, backend="gaussian",
                      truncation={"n_modes": params.bath.n_modes, "stable_decomposition": prop.stable})


def gaussian_ergotropy(mean2, cov2, omega_s: float) -> float:
    """Ergotropy of a one-mode Gaussian state under ``omega_s (n + 1/2)``.

    Mean energy minus the energy of the thermal state with the same symplectic
    eigenvalue.
    """
    mean2 = np.asarray(mean2, dtype=float)
    cov2 = np.asarray(cov2, dtype=float)
    if not is_physical(cov2):
        raise PreconditionError("unphysical covariance")
    w = 0.5 * omega_s * (np.trace(cov2) + mean2 @ mean2) - omega_s * np.sqrt(np.linalg.det(cov2))
    return float(max(w, 0.0))


def williamson_single_mode(cov2) -> tuple[float, float, float]:
    """``cov2 = nu R S S^T R^T``: returns ``(nu, r, phi)`` for ``S(r e^{i phi})`` acting on a thermal state.

    The squeezed (minimum-variance) quadrature lies at angle ``phi / 2``.
    """
    cov2 = np.asarray(cov2, dtype=float)
    sxx, syy, sxy = cov2[0, 0], cov2[1, 1], 0.5 * (cov2[0, 1] + cov2[1, 0])
    det = sxx * syy - sxy * sxy
    if det <= 0 or sxx <= 0:
        raise PreconditionError("covariance must be positive definite")
    nu = float(np.sqrt(det))
    half = 0.5 * (sxx + syy)
    rad = float(np.hypot(0.5 * (sxx - syy), sxy))
    lmax, lmin = half + rad, det / (half + rad)
    r = 0.25 * float(np.log(lmax / lmin))
    phi = float(np.arctan2(2.0 * sxy, sxx - syy) + np.pi) if rad > 0 else 0.0
    return nu, r, phi


def husimi_coefficients(mean2, cov2):
    """``(g, B, scale)`` with ``<a|rho|a> e^{|a|^2} = scale exp(z^T B z / 2 + g^T z)``, ``z = (a*, a)``."""
    mean2 = np.asarray(mean2, dtype=float)
    cov2 = np.asarray(cov2, dtype=float)
    sxx, syy, sxy = cov2[0, 0], cov2[1, 1], 0.5 * (cov2[0, 1] + cov2[1, 0])
    # Q-function covariance of (a, a*)
    d = 0.5 * (sxx + syy) + 0.5
    o = 0.5 * (sxx - syy) + 1j * sxy
    Sigma = np.array([[d, o], [np.conj(o), d]])
    Sinv = np.linalg.inv(Sigma)
    alpha = complex(mean2[0], mean2[1]) / np.sqrt(2.0)
    beta = np.array([alpha, np.conj(alpha)])
    X = np.array([[0.0, 1.0], [1.0, 0.0]])
    B = X - Sinv @ X
    g = Sinv @ beta
    scale = np.exp(-0.5 * np.real(np.conj(beta) @ Sinv @ beta)) / np.sqrt(np.real(np.linalg.det(Sigma)))
    return g, B, float(scale)


def fock_elements(mean2, cov2, dim: int) -> np.ndarray:
    """``<m|rho|n>`` for ``m, n < dim`` of a one-mode Gaussian state, untruncated values.

    The coefficients of the Husimi power series obey a two-index Hermite recurrence.
    """
    g, B, scale = husimi_coefficients(mean2, cov2)
    return scale * hermite_grid(g[0], g[1], B[0, 0], B[0, 1], B[1, 1], dim)


def gaussian_to_fock(mean2, cov2, dim: int | None = None, tol: float = 1e-6, max_dim: int = 400) -> DensityMatrix:
    """One-mode Gaussian moments as a truncated Fock density matrix.

    With ``dim=None`` the smallest truncation whose top level holds less than
    ``tol`` population is used (at most ``max_dim``). The result is
    renormalized after truncation.
    """
    mean2 = np.asarray(mean2, dtype=float)
    cov2 = np.asarray(cov2, dtype=float)
    if not is_physical(cov2):
        raise PreconditionError("covariance violates the uncertainty principle")
    if dim is not None:
        rho = fock_elements(mean2, cov2, int(dim))
        pops = np.real(np.diag(rho))
        if pops[-1] >= tol:
            raise TruncationOverflowError(
                f"top-level population {pops[-1]:.3e} at dim {dim} exceeds {tol:g}", population=float(pops[-1])
            )
    else:
        # photon-number mean and spread set the first guess
        n_mean = 0.5 * (np.trace(cov2) + mean2 @ mean2 - 1.0)
        var = 0.5 * (np.sum(cov2**2) - 0.5) + mean2 @ cov2 @ mean2
        size = min(max_dim, int(np.ceil(n_mean + 12 * np.sqrt(max(var, 0.0)) + 30)))
        while True:
            rho = fock_elements(mean2, cov2, size)
            pops = np.real(np.diag(rho))
            if pops[-1] < tol or size >= max_dim:
                break
            size = min(max_dim, int(size * 1.5))
        try:
            dim = smallest_dim(pops, tol)
        except TruncationOverflowError:
            raise TruncationOverflowError(
                f"Gaussian state needs more than {max_dim} Fock levels for top-level population < {tol:g}",
                population=float(pops[-1]),
            ) from None
        rho = rho[:dim, :dim]
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(rho / np.real(np.trace(rho)), (dim,))
