"""Work-extraction metrics for a battery state: ergotropy and its split into
incoherent and coherent parts, l1 coherence, and charging power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError, PreconditionError, SelfCheckError
from .hilbert import HERMITIAN_ATOL, Operator, as_matrix, herm_eig

CLIP_ATOL = 1e-10
SELF_CHECK_ATOL = 1e-10
POWER_FLOOR = 1e-8


def oscillator_hamiltonian(dim: int, omega: float = 1.0) -> Operator:
    """``omega (n + 1/2)`` on ``dim`` Fock levels."""
    return Operator(np.diag(omega * (np.arange(dim) + 0.5)).astype(complex), (dim,))


def _energy_basis(H):
    mat = as_matrix(H)
    off = mat - np.diag(np.diag(mat))
    if not np.any(off):
        if np.max(np.abs(np.imag(np.diag(mat))), initial=0.0) > HERMITIAN_ATOL:
            raise PreconditionError("Hamiltonian diagonal is not real")
        eps = np.real(np.diag(mat))
        order = np.argsort(eps, kind="stable")
        return eps[order], np.eye(len(eps))[:, order]
    return herm_eig(mat)


def _spectrum(rho):
    mat = as_matrix(rho)
    herm = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if herm > HERMITIAN_ATOL * max(1.0, float(np.max(np.abs(mat)))):
        raise PreconditionError(f"state not Hermitian (asymmetry {herm:.3e})")
    r, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    if r[0] < -CLIP_ATOL:
        raise PreconditionError(f"state has eigenvalue {r[0]:.3e} below -{CLIP_ATOL:g}")
    r = np.clip(r, 0.0, None)
    r = r / r.sum()
    order = np.argsort(-r, kind="stable")
    return r[order], vecs[:, order]


def _check_pair(rho, H):
    a, b = as_matrix(rho), as_matrix(H)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"state {a.shape} and Hamiltonian {b.shape} differ in size")


@dataclass
class PassiveDecomposition:
    r: np.ndarray
    eps: np.ndarray
    U_extract: np.ndarray
    rho_passive: np.ndarray
    state_vectors: np.ndarray
    energy_vectors: np.ndarray

    @property
    def passive_energy(self) -> float:
        return float(self.r @ self.eps)


def passive_state(rho, H) -> PassiveDecomposition:
    """Largest population on the lowest level, next largest on the next, and so on."""
    _check_pair(rho, H)
    r, rv = _spectrum(rho)
    eps, ev = _energy_basis(H)
    U = ev @ rv.conj().T
    rho_p = (ev * r) @ ev.conj().T
    return PassiveDecomposition(r, eps, U, rho_p, rv, ev)


def energy(rho, H) -> float:
    return float(np.real(np.einsum("ij,ji->", as_matrix(rho), as_matrix(H))))


def ergotropy(rho, H, check: bool = True) -> float:
    """Mean energy minus passive energy.

    With ``check`` the value is recomputed from the overlap double sum
    ``sum_ij r_j eps_i (|<r_j|eps_i>|^2 - delta_ij)`` and the two must agree.
    """
    dec = passive_state(rho, H)
    w = energy(rho, H) - dec.passive_energy
    if check:
        overlaps = np.abs(dec.state_vectors.conj().T @ dec.energy_vectors) ** 2
        w_sum = float(dec.r @ overlaps @ dec.eps - dec.r @ dec.eps)
        scale = max(1.0, float(np.max(np.abs(dec.eps))))
        if abs(w - w_sum) > SELF_CHECK_ATOL * scale:
            raise SelfCheckError(f"ergotropy evaluations disagree: {w!r} vs {w_sum!r}")
    return float(w)


def dephase(rho, H) -> np.ndarray:
    """Drop the off-diagonal part of ``rho`` in the eigenbasis of ``H``, returned in that basis."""
    _check_pair(rho, H)
    _, ev = _energy_basis(H)
    pops = np.real(np.einsum("ij,ik,kj->j", ev.conj(), as_matrix(rho), ev))
    return np.diag(pops).astype(complex)


def incoherent_ergotropy(rho, H) -> float:
    _check_pair(rho, H)
    eps, ev = _energy_basis(H)
    pops = np.real(np.einsum("ij,ik,kj->j", ev.conj(), as_matrix(rho), ev))
    if pops.min() < -CLIP_ATOL:
        raise PreconditionError(f"negative population {pops.min():.3e}")
    pops = np.clip(pops, 0.0, None)
    pops = pops / pops.sum()
    return float(pops @ eps - np.sort(pops)[::-1] @ eps)


def coherent_ergotropy(rho, H) -> float:
    return ergotropy(rho, H) - incoherent_ergotropy(rho, H)


def l1_coherence(rho, H=None) -> float:
    """Sum of absolute off-diagonal elements, in the eigenbasis of ``H`` if given."""
    mat = as_matrix(rho)
    if H is not None:
        _check_pair(rho, H)
        _, ev = _energy_basis(H)
        mat = ev.conj().T @ mat @ ev
    return float(np.abs(mat).sum() - np.abs(np.diag(mat)).sum())


def _uniform_step(times) -> float:
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if np.any(steps <= 0):
        raise PreconditionError("times must be strictly increasing")
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, abs(dt)):
        raise PreconditionError("power needs a uniform time grid")
    return dt


def instantaneous_power(W, times) -> np.ndarray:
    """``dW/dt``: second-order central differences inside, second-order one-sided at the ends."""
    W = np.asarray(W, dtype=float)
    if len(W) < 3 or len(times) != len(W):
        raise InvalidParameterError("power needs at least 3 samples on a matching grid")
    return np.gradient(W, _uniform_step(times), edge_order=2)


def average_power(W, times, t0_index: int, t_index: int) -> float:
    if t_index <= t0_index:
        raise InvalidParameterError(f"empty window: t_index={t_index} <= t0_index={t0_index}")
    return float((W[t_index] - W[t0_index]) / (times[t_index] - times[t0_index]))


def extrema(W, times, floor: float = POWER_FLOOR):
    """Indices of local minima and maxima of ``W``.

    Power samples with ``|P| <= floor`` are treated as flat. A rising start
    counts as a minimum at index 0.
    """
    W = np.asarray(W, dtype=float)
    P = instantaneous_power(W, times)
    sign = np.where(P > floor, 1, np.where(P < -floor, -1, 0))
    idx = np.flatnonzero(sign)
    minima, maxima = [], []
    if len(idx) == 0:
        return minima, maxima
    if sign[idx[0]] > 0:
        minima.append(int(np.argmin(W[: idx[0] + 1])))
    for a, b in zip(idx[:-1], idx[1:]):
        if sign[a] == sign[b]:
            continue
        window = slice(a, b + 1)
        if sign[a] > 0:
            maxima.append(int(a + np.argmax(W[window])))
        else:
            minima.append(int(a + np.argmin(W[window])))
    return minima, maxima


def charging_cycles(W, times, floor: float = POWER_FLOOR) -> list[tuple[int, int]]:
    """(minimum, next maximum) index pairs."""
    minima, maxima = extrema(W, times, floor)
    cycles = []
    for lo in minima:
        nxt = [hi for hi in maxima if hi > lo]
        if nxt:
            cycles.append((lo, nxt[0]))
    return cycles


def running_average_power(W, times, floor: float = POWER_FLOOR) -> np.ndarray:
    """Average power measured from the most recent charging-cycle start (or ``t=0``).

    Undefined (NaN) at the start point itself.
    """
    W = np.asarray(W, dtype=float)
    times = np.asarray(times, dtype=float)
    starts = sorted(set([0] + [lo for lo, _ in charging_cycles(W, times, floor)]))
    t0 = np.asarray(starts)[np.searchsorted(starts, np.arange(len(W)), side="right") - 1]
    out = np.full(len(W), np.nan)
    ok = np.arange(len(W)) > t0
    out[ok] = (W[ok] - W[t0[ok]]) / (times[ok] - times[t0[ok]])
    return out


@dataclass
class ErgotropyReport:
    times: np.ndarray
    E: np.ndarray
    W: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    C_l1: np.ndarray
    P: np.ndarray
    P_av: np.ndarray


def ergotropy_report(states, times, H, floor: float = POWER_FLOOR) -> ErgotropyReport:
    times = np.asarray(times, dtype=float)
    E, W, Wi, C = (np.empty(len(times)) for _ in range(4))
    for k, rho in enumerate(states):
        E[k] = energy(rho, H)
        W[k] = ergotropy(rho, H)
        Wi[k] = incoherent_ergotropy(rho, H)
        C[k] = l1_coherence(rho, H)
    P = instantaneous_power(W, times) if len(times) >= 3 else np.full(len(times), np.nan)
    P_av = running_average_power(W, times, floor) if len(times) >= 3 else np.full(len(times), np.nan)
    return ErgotropyReport(times, E, W, Wi, W - Wi, C, P, P_av)
