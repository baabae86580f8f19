"""Brute-force reduced dynamics on the truncated joint Fock space.

The joint Hamiltonian is diagonalized once. The product initial state is split
into weighted pure components (eigenvectors of the battery state times bath
Fock configurations); each grid time then costs one rotation of those
components and a partial trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .bath import ModelParams, discretize_bath, thermal_populations, total_hamiltonian_sparse, total_parity
from .errors import CapacityError, DimensionMismatchError, TruncationOverflowError
from .hilbert import DensityMatrix, Operator, as_matrix
from .trajectory import Trajectory, check_grid

log = logging.getLogger(__name__)

DEFAULT_MAX_JOINT_DIM = 20_000
DEFAULT_OVERFLOW = 1e-4


def purity(rho) -> float:
    mat = as_matrix(rho)
    return float(np.real(np.einsum("ij,ji->", mat, mat)))


def smallest_dim(populations, top_population: float, minimum: int = 2) -> int:
    """Smallest truncation ``d`` past the bulk with ``populations[d-1] < top_population``."""
    pops = np.asarray(populations, dtype=float)
    peak = int(np.argmax(pops))
    for k in range(peak, len(pops)):
        if pops[k] < top_population:
            return max(minimum, k + 1)
    raise TruncationOverflowError(
        f"populations never fall below {top_population:g} within {len(pops)} levels", population=float(pops[-1])
    )


def default_system_dim(initial_populations, params: ModelParams, top_population: float = 1e-12,
                       bath_top_population: float = 1e-6) -> int:
    """Battery truncation: the initial state and a battery thermalized at the bath temperature both fit."""
    d = smallest_dim(initial_populations, top_population)
    if params.T > 0:
        pops = thermal_populations(params.omega_s, params.T, 4096)
        d = max(d, smallest_dim(pops, bath_top_population))
    return d


DEFAULT_COMPONENT_TOL = 1e-8


@dataclass
class _Sector:
    index: np.ndarray     # joint basis states in this sector
    energies: np.ndarray
    vectors: np.ndarray
    real: bool
    cols: np.ndarray      # pure components with support here
    coeffs: np.ndarray    # their eigenbasis amplitudes


class FockEvolution:
    """Joint unitary evolution of ``rho_S(0) (x) thermal bath`` on fixed truncations.

    The Hamiltonian is quadratic, so it conserves the parity of the total
    excitation number; each parity sector is diagonalized on its own. The
    initial state is split into weighted pure components (battery eigenvectors
    times bath Fock configurations). The lightest components are dropped as
    long as their total weight stays within ``component_tol`` (which bounds the
    trace-distance error) and the rest are renormalized.
    """

    def __init__(self, rho_s0, params: ModelParams, dims, *, max_joint_dim: int = DEFAULT_MAX_JOINT_DIM,
                 component_tol: float = DEFAULT_COMPONENT_TOL):
        dims = tuple(int(d) for d in dims)
        if len(dims) != params.bath.n_modes + 1:
            raise DimensionMismatchError(f"need {params.bath.n_modes + 1} truncations, got {len(dims)}")
        rho = as_matrix(rho_s0)
        if rho.shape[0] != dims[0]:
            raise DimensionMismatchError(f"battery state has side {rho.shape[0]}, truncation is {dims[0]}")
        joint = int(np.prod(dims))
        if joint > max_joint_dim:
            raise CapacityError(
                f"joint Fock dimension {joint} exceeds the cap {max_joint_dim}; "
                "reduce truncations or bath modes, or use the gaussian backend",
                required=joint, available=max_joint_dim,
            )
        self.params = params
        self.dims = dims
        self.joint_dim = joint
        self._H = total_hamiltonian_sparse(params, dims)

        # weighted pure components of the initial joint state
        s_vals, s_vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
        omegas, _ = discretize_bath(params.bath)
        bath_w = np.ones(1)
        for w, d in zip(omegas, dims[1:]):
            bath_w = np.kron(bath_w, thermal_populations(w, params.T, d))
        d_env = len(bath_w)
        weights = np.outer(np.clip(s_vals, 0.0, None), bath_w)
        flat = weights.ravel()
        order = np.argsort(flat, kind="stable")
        dropped = np.cumsum(flat[order]) <= component_tol
        keep = np.ones(flat.size, dtype=bool)
        keep[order[dropped]] = False
        keep &= flat > 0
        js, bs = np.divmod(np.nonzero(keep)[0], d_env)
        kept = flat[keep]
        self.discarded_weight = float(max(0.0, 1.0 - kept.sum()))
        self.weights = kept / kept.sum()
        self.d_env = d_env
        self.n_components = len(js)

        parity = total_parity(dims)
        coo = self._H.tocoo()
        mixed = np.any((parity[coo.row] != parity[coo.col]) & (coo.data != 0))
        groups = [np.arange(joint)] if mixed else [np.nonzero(parity == b)[0] for b in (0, 1)]
        amp = s_vecs[:, js] * np.sqrt(self.weights)[None, :]           # (d0, K)
        rows = np.arange(dims[0])[:, None] * d_env + bs[None, :]       # joint row of each amplitude
        self.sectors = []
        for index in groups:
            pos = np.full(joint, -1)
            pos[index] = np.arange(len(index))
            p = pos[rows]
            inside = (p >= 0) & (amp != 0)
            cols = np.nonzero(inside.any(axis=0))[0]
            if len(cols) == 0:
                continue
            colpos = np.full(len(js), -1)
            colpos[cols] = np.arange(len(cols))
            sub = np.zeros((len(index), len(cols)), dtype=np.complex128)
            r_i, c_i = np.nonzero(inside)
            sub[p[r_i, c_i], colpos[c_i]] = amp[r_i, c_i]
            block = self._H[index][:, index].toarray()
            real = not np.any(block.imag)
            vals, vecs = np.linalg.eigh(block.real) if real else np.linalg.eigh(block)
            self.sectors.append(_Sector(index, vals, vecs, real, cols, vecs.conj().T @ sub))
        log.debug("fock evolution: joint dim %d, %d sectors, %d pure components", joint, len(self.sectors),
                  self.n_components)

    @property
    def H(self) -> Operator:
        return Operator(self._H.toarray(), self.dims)

    def _components(self, t: float) -> np.ndarray:
        phi = np.zeros((self.joint_dim, self.n_components), dtype=np.complex128)
        for sec in self.sectors:
            ph = np.exp(-1j * sec.energies * t)[:, None] * sec.coeffs
            if sec.real:
                # contiguous copies keep the products on BLAS
                out = sec.vectors @ np.ascontiguousarray(ph.real) + 1j * (sec.vectors @ np.ascontiguousarray(ph.imag))
            else:
                out = sec.vectors @ ph
            phi[np.ix_(sec.index, sec.cols)] = out
        return phi

    def reduced_state(self, t: float) -> tuple[DensityMatrix, np.ndarray]:
        """Battery state at ``t`` and the top-level population of every mode."""
        phi = self._components(t)
        k = phi.shape[1]
        blocks = phi.reshape(self.dims[0], self.d_env * k)
        rho = blocks @ blocks.conj().T
        pops = np.sum(np.abs(phi) ** 2, axis=1).reshape(self.dims)
        tops = np.array([pops.take(d - 1, axis=i).sum() for i, d in enumerate(self.dims)])
        return DensityMatrix(0.5 * (rho + rho.conj().T), (self.dims[0],)), tops

    def joint_state(self, t: float) -> DensityMatrix:
        phi = self._components(t)
        return DensityMatrix(phi @ phi.conj().T, self.dims)


def simulate_reduced(rho_s0, params: ModelParams, dims, times, *, overflow: float = DEFAULT_OVERFLOW,
                     max_joint_dim: int = DEFAULT_MAX_JOINT_DIM,
                     component_tol: float = DEFAULT_COMPONENT_TOL) -> Trajectory:
    """Battery states ``Tr_E[e^{-iHt} (rho_S0 (x) rho_E) e^{iHt}]`` on the grid ``times``.

    Raises :class:`TruncationOverflowError` as soon as any mode's top Fock level
    holds more than ``overflow`` population.
    """
    times = np.asarray(times, dtype=float)
    check_grid(times)
    evo = FockEvolution(rho_s0, params, dims, max_joint_dim=max_joint_dim, component_tol=component_tol)
    states = []
    max_top = np.zeros(len(evo.dims))
    for t in times:
        rho, tops = evo.reduced_state(t)
        bad = np.nonzero(tops > overflow)[0]
        if len(bad):
            i = int(bad[0])
            raise TruncationOverflowError(
                f"mode {i} (truncation {evo.dims[i]}) has top-level population {tops[i]:.3e} > {overflow:g} at t={t:g}",
                mode=i, population=float(tops[i]), time=float(t),
            )
        max_top = np.maximum(max_top, tops)
        states.append(rho)
    return Trajectory(
        times, params, states=states, backend="fock",
        truncation={"dims": list(evo.dims), "joint_dim": evo.joint_dim, "max_top_population": max_top.tolist(),
                    "components": evo.n_components, "discarded_weight": evo.discarded_weight,
                    "sectors": len(evo.sectors)},
    )
