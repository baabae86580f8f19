"""Physical model: oscillator battery bilinearly coupled to a discretized bosonic bath.

Units are hbar = k_B = 1. Bath oscillators have unit mass. The coupling operator
on the battery is either ``q - mu p`` (``CouplingForm.SUBTRACTIVE``) or
``(1 - mu) q + mu p`` (``CouplingForm.CONVEX``), multiplied by ``sum_n c_n q_n``.

Two quadrature conventions meet here and nowhere else:

* physical ``R = (q, p, q_1, p_1, ...)`` used by :func:`quadratic_form`;
* dimensionless ``x = sqrt(m w) q``, ``y = p / sqrt(m w)`` (bath: ``m = 1``,
  ``w = w_n``) used by the Gaussian backend, with vacuum covariance ``I/2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, InvalidDimensionError, InvalidParameterError
from .hilbert import DensityMatrix, Operator, quadratures


class CouplingForm(str, enum.Enum):
    SUBTRACTIVE = "mu"
    CONVEX = "mu_tilde"


@dataclass(frozen=True)
class BathSpec:
    n_modes: int = 200
    eta: float = 0.1
    cutoff: float = 5.0
    omega_max: float = 10.0
    # exponent s of J ~ w^s; 1 is Ohmic (hook for sub/super-Ohmic baths)
    ohmicity: float = 1.0

    def __post_init__(self):
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidParameterError(f"n_modes must be a positive integer, got {self.n_modes}")
        if self.eta < 0:
            raise InvalidParameterError(f"eta must be >= 0, got {self.eta}")
        if self.cutoff <= 0:
            raise InvalidParameterError(f"cutoff must be > 0, got {self.cutoff}")
        if self.omega_max < self.cutoff:
            raise InvalidParameterError(f"omega_max ({self.omega_max}) must be >= cutoff ({self.cutoff})")
        if self.ohmicity <= 0:
            raise InvalidParameterError(f"ohmicity must be > 0, got {self.ohmicity}")


@dataclass(frozen=True)
class ModelParams:
    m: float = 1.5
    omega_s: float = 1.0
    mu: float = 0.0
    form: CouplingForm = CouplingForm.SUBTRACTIVE
    T: float = 1.0
    bath: BathSpec = field(default_factory=BathSpec)

    def __post_init__(self):
        object.__setattr__(self, "form", CouplingForm(self.form))
        if self.m <= 0 or self.omega_s <= 0:
            raise InvalidParameterError(f"m and omega_s must be positive (m={self.m}, omega_s={self.omega_s})")
        if self.T < 0:
            raise InvalidParameterError(f"temperature must be >= 0, got {self.T}")
        if self.mu < 0:
            raise InvalidParameterError(f"coupling coefficient must be >= 0, got {self.mu}")
        if self.form is CouplingForm.CONVEX and self.mu > 1:
            raise InvalidParameterError(f"mu_tilde must lie in [0, 1], got {self.mu}")

    @property
    def coupling_weights(self) -> tuple[float, float]:
        """Weights ``(w_q, w_p)`` of the battery coupling operator ``w_q q + w_p p``."""
        if self.form is CouplingForm.SUBTRACTIVE:
            return 1.0, -self.mu
        return 1.0 - self.mu, self.mu

    def with_(self, **changes) -> "ModelParams":
        bath_changes = {k: changes.pop(k) for k in list(changes) if k in BathSpec.__dataclass_fields__}
        bath = replace(self.bath, **bath_changes) if bath_changes else self.bath
        return replace(self, bath=bath, **changes)


def spectral_density(omega, spec: BathSpec):
    """``J(w) = eta w^s cutoff^(1-s) exp(-w / cutoff)``; Ohmic for ``s = 1``."""
    omega = np.asarray(omega, dtype=float)
    s = spec.ohmicity
    out = spec.eta * omega**s * spec.cutoff ** (1.0 - s) * np.exp(-omega / spec.cutoff)
    return out if out.ndim else float(out)


def discretize_bath(spec: BathSpec) -> tuple[np.ndarray, np.ndarray]:
    """Linear grid ``w_n = n dw`` with ``c_n^2 = (2/pi) J(w_n) w_n dw``."""
    n = int(spec.n_modes)
    dw = spec.omega_max / n
    omegas = dw * np.arange(1, n + 1)
    couplings = np.sqrt(2.0 / np.pi * spectral_density(omegas, spec) * omegas * dw)
    return omegas, couplings


def thermal_occupation(omega: float, T: float) -> float:
    if T <= 0:
        return 0.0
    x = omega / T
    # e^{-x} / (1 - e^{-x}) stays finite where 1 / expm1(x) overflows
    return float(np.exp(-x) / -np.expm1(-x))


def thermal_state_fock(omega: float, T: float, dim: int) -> DensityMatrix:
    """Gibbs state of ``omega a^dag a`` on ``dim`` levels, renormalized after truncation."""
    if dim < 2:
        raise InvalidDimensionError(f"dim must be >= 2, got {dim}")
    if T < 0:
        raise InvalidParameterError(f"temperature must be >= 0, got {T}")
    pops = thermal_populations(omega, T, dim)
    return DensityMatrix(np.diag(pops).astype(np.complex128), (dim,))


def thermal_populations(omega: float, T: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if T == 0:
        return (n == 0).astype(float)
    logp = -n * omega / T
    p = np.exp(logp - logp.max())
    return p / p.sum()


def thermal_covariance(omega: float, T: float) -> np.ndarray:
    """``diag(nu, nu)`` with ``nu = coth(omega / 2T) / 2`` in the dimensionless convention."""
    if omega <= 0:
        raise InvalidParameterError(f"omega must be > 0, got {omega}")
    if T < 0:
        raise InvalidParameterError(f"temperature must be >= 0, got {T}")
    nu = thermal_occupation(omega, T) + 0.5
    return nu * np.eye(2)


def default_bath_dim(omega: float, T: float, top_population: float = 1e-6, floor: int = 3) -> int:
    """Smallest truncation whose thermal top-level population is below ``top_population``."""
    if T <= 0:
        return floor
    # p_k = (1 - e^-x) e^-kx with x = omega / T
    x = omega / T
    k = int(np.ceil((np.log(-np.expm1(-x)) - np.log(top_population)) / x))
    return max(floor, k + 1)


def default_bath_dims(params: ModelParams, top_population: float = 1e-6) -> tuple[int, ...]:
    omegas, _ = discretize_bath(params.bath)
    return tuple(default_bath_dim(w, params.T, top_population) for w in omegas)


def coupling_operator(params: ModelParams, dim: int) -> Operator:
    """Battery part of the interaction, ``w_q q + w_p p`` on a ``dim``-level oscillator."""
    q, p = quadratures(dim, params.m, params.omega_s)
    wq, wp = params.coupling_weights
    return Operator(wq * q.matrix + wp * p.matrix, (dim,))


def free_oscillator(omega: float, dim: int) -> np.ndarray:
    """``w (n + 1/2)`` on the lowest ``dim`` levels.

    Squaring truncated quadratures instead would drop the top level below its
    neighbour and trap population there.
    """
    return np.diag(omega * (np.arange(dim) + 0.5))


def system_hamiltonian(params: ModelParams, dim: int) -> Operator:
    return Operator(free_oscillator(params.omega_s, dim), (dim,))


def _lift(op, k: int, dims) -> sp.csr_matrix:
    left = int(np.prod(dims[:k]))
    right = int(np.prod(dims[k + 1 :]))
    return sp.kron(sp.kron(sp.identity(left, format="csr"), sp.csr_matrix(op)), sp.identity(right, format="csr"), format="csr")


def total_hamiltonian_sparse(params: ModelParams, dims) -> sp.csr_matrix:
    """Joint Hamiltonian on ``battery (x) bath_1 (x) ... (x) bath_N`` as a sparse matrix.

    ``dims[0]`` is the battery truncation, ``dims[1:]`` the bath modes.
    """
    dims = tuple(int(d) for d in dims)
    n = params.bath.n_modes
    if len(dims) != n + 1:
        raise DimensionMismatchError(f"need {n + 1} truncations (battery + {n} bath modes), got {len(dims)}")
    if any(d < 2 for d in dims):
        raise InvalidDimensionError(f"every truncation must be >= 2, got {dims}")
    omegas, couplings = discretize_bath(params.bath)

    H = _lift(system_hamiltonian(params, dims[0]).matrix, 0, dims)
    Q = coupling_operator(params, dims[0]).matrix
    Q_lift = _lift(Q, 0, dims)
    for k, (w, c) in enumerate(zip(omegas, couplings), start=1):
        qn, _ = quadratures(dims[k], 1.0, w)
        H = H + _lift(free_oscillator(w, dims[k]), k, dims)
        if c != 0.0:
            H = H + c * (Q_lift @ _lift(qn.matrix, k, dims))
    return ((H + H.conj().T) * 0.5).tocsr()


def build_total_hamiltonian(params: ModelParams, dims) -> Operator:
    """Dense form of :func:`total_hamiltonian_sparse`."""
    dims = tuple(int(d) for d in dims)
    return Operator(total_hamiltonian_sparse(params, dims).toarray(), dims)


def total_parity(dims) -> np.ndarray:
    """Parity of the total excitation number of every joint basis state (row-major order)."""
    par = np.zeros(1, dtype=np.int8)
    for d in dims:
        par = ((par[:, None] + np.arange(d, dtype=np.int8)[None, :]) % 2).ravel()
    return par


@dataclass(frozen=True)
class QuadraticForm:
    """``H = R^T M R / 2`` over ``R = (q, p, q_1, p_1, ..., q_N, p_N)``.

    ``scales`` maps dimensionless quadratures to physical ones: ``R = scales * x``.
    """

    M: np.ndarray
    scales: np.ndarray
    dimensionless: bool = False

    @property
    def n_modes(self) -> int:
        return self.M.shape[0] // 2

    def to_dimensionless(self) -> "QuadraticForm":
        if self.dimensionless:
            return self
        s = self.scales
        return QuadraticForm(s[:, None] * self.M * s[None, :], np.ones_like(s), True)

    def energy(self, mean, cov) -> float:
        """``<H> = (tr(M cov) + mean^T M mean) / 2`` in this form's coordinates."""
        mean = np.asarray(mean)
        return 0.5 * (float(np.einsum("ij,ji->", self.M, cov)) + float(mean @ self.M @ mean))

    def is_positive_definite(self) -> bool:
        try:
            np.linalg.cholesky(self.M)
            return True
        except np.linalg.LinAlgError:
            return False


def quadratic_form(params: ModelParams) -> QuadraticForm:
    omegas, couplings = discretize_bath(params.bath)
    n = len(omegas)
    size = 2 * (n + 1)
    M = np.zeros((size, size))
    m, ws = params.m, params.omega_s
    M[0, 0] = m * ws**2
    M[1, 1] = 1.0 / m
    iq = 2 + 2 * np.arange(n)
    M[iq, iq] = omegas**2
    M[iq + 1, iq + 1] = 1.0
    wq, wp = params.coupling_weights
    M[0, iq] = M[iq, 0] = couplings * wq
    M[1, iq] = M[iq, 1] = couplings * wp

    scales = np.empty(size)
    scales[0] = 1.0 / np.sqrt(m * ws)
    scales[1] = np.sqrt(m * ws)
    scales[iq] = 1.0 / np.sqrt(omegas)
    scales[iq + 1] = np.sqrt(omegas)
    return QuadraticForm(M, scales)
