"""Run a configured simulation and tabulate its battery metrics."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from ._kernels import BACKEND as KERNELS
from .bath import ModelParams, default_bath_dims, quadratic_form, thermal_covariance, thermal_state_fock
from .config import COLUMNS, InitialState, RunConfig
from .errors import ConfigError, DimensionMismatchError, TruncationOverflowError
from .fock_dynamics import default_system_dim, purity, simulate_reduced
from .gaussian import (
    GaussianPropagator,
    coherent_moments,
    gaussian_ergotropy,
    gaussian_to_fock,
    initial_joint_state,
    simulate_gaussian,
)
from .hilbert import DensityMatrix, coherent_vector, fock_embed, fock_moments, fock_state, trace_distance
from .memory import distance_trajectory
from .metrics import (
    energy,
    ergotropy,
    incoherent_ergotropy,
    instantaneous_power,
    l1_coherence,
    oscillator_hamiltonian,
    running_average_power,
)
from .trajectory import Trajectory, uniform_grid

log = logging.getLogger(__name__)

SWEEP_AXES = ("mu", "mu_tilde", "T", "eta", "N", "dims")


# ---------------------------------------------------------------- states


def _state_temperature(state: InitialState, params: ModelParams) -> float:
    return params.T if state.T_s is None else state.T_s


def gaussian_moments(state: InitialState, params: ModelParams):
    if state.kind == "coherent":
        return coherent_moments(state.alpha)
    if state.kind == "thermal":
        return np.zeros(2), thermal_covariance(params.omega_s, _state_temperature(state, params))
    raise ConfigError(f"a {state.kind} state has no Gaussian form")


def fock_populations(state: InitialState, params: ModelParams, levels: int = 400) -> np.ndarray:
    if state.kind == "coherent":
        return np.abs(coherent_vector(state.alpha, levels)) ** 2
    if state.kind == "thermal":
        return np.real(np.diag(thermal_state_fock(params.omega_s, _state_temperature(state, params), levels).matrix))
    if state.kind == "fock":
        return (np.arange(levels) == state.n).astype(float)
    amp = np.array([abs(state.c0), abs(state.c1)]) ** 2
    return np.concatenate([amp / amp.sum(), np.zeros(levels - 2)])


def fock_density(state: InitialState, params: ModelParams, dim: int) -> DensityMatrix:
    if state.kind == "coherent":
        psi = coherent_vector(state.alpha, dim)
        return DensityMatrix.from_vector(psi / np.linalg.norm(psi))
    if state.kind == "thermal":
        return thermal_state_fock(params.omega_s, _state_temperature(state, params), dim)
    if state.kind == "fock":
        return fock_state(state.n, dim)
    psi = np.zeros(dim, dtype=complex)
    psi[:2] = state.c0, state.c1
    return DensityMatrix.from_vector(psi / np.linalg.norm(psi))


ENVELOPE_SAMPLES = 81
ENVELOPE_TOP = 1e-6
PURE_TOP = 1e-12
THERMAL_TOP = 1e-6


def envelope_dims(state: InitialState, params: ModelParams, t_max: float, top_population: float = ENVELOPE_TOP,
                  samples: int = ENVELOPE_SAMPLES, max_dim: int = 400,
                  system_top: float | None = None) -> tuple[int, ...]:
    """Per-mode truncations read off an exact Gaussian run with ``state``'s first and second moments.

    The quadratic dynamics move every mode's occupation the same way for any
    input with these moments, so this predicts how far each mode climbs in Fock
    space over ``[0, t_max]``. ``system_top`` (default ``top_population``)
    applies to the battery.
    """
    tops = [top_population if system_top is None else system_top] + [top_population] * params.bath.n_modes
    if state.is_gaussian:
        mean, cov = gaussian_moments(state, params)
    else:
        mean, cov = fock_moments(fock_density(state, params, max(8, int(state.n) + 4)))
    prop = GaussianPropagator(quadratic_form(params).to_dimensionless())
    g0 = initial_joint_state(params, mean, cov)
    need = np.full(params.bath.n_modes + 1, 2)
    for t in np.linspace(0.0, t_max, samples):
        S = prop.matrix(t)
        m, c = S @ g0.mean, S @ g0.cov @ S.T
        for k in range(len(need)):
            blk = slice(2 * k, 2 * k + 2)
            rho = gaussian_to_fock(m[blk], c[blk, blk], tol=tops[k], max_dim=max_dim)
            need[k] = max(need[k], rho.shape[0])
    return tuple(int(d) for d in need)


def fock_dims(cfg: RunConfig, states=None) -> tuple[int, ...]:
    """Per-mode truncations: explicit overrides, else the adaptive defaults.

    Defaults cover the initial state, the bath's thermal occupation and the
    Gaussian envelope of the dynamics, whichever needs more levels.
    """
    tr = cfg.truncation
    params = cfg.params
    states = states or [cfg.initial_state] + ([cfg.pair_state] if cfg.pair_state else [])
    # a thermal input has no coherences, so its tail costs only linear error
    tops = [THERMAL_TOP if s.kind == "thermal" else PURE_TOP for s in states]
    if tr["system_dim"] is not None:
        d_sys = int(tr["system_dim"])
    else:
        d_sys = max(default_system_dim(fock_populations(s, params), params, top_population=top)
                    for s, top in zip(states, tops))
    auto = [envelope_dims(s, params, cfg.grid.t_max, system_top=top) for s, top in zip(states, tops)]
    if tr["system_dim"] is None:
        d_sys = max([d_sys] + [a[0] for a in auto])
    if tr["bath_dims"] is not None:
        bath = tuple(int(d) for d in tr["bath_dims"])
        if len(bath) != params.bath.n_modes:
            raise ConfigError(f"bath_dims has {len(bath)} entries for {params.bath.n_modes} modes")
    else:
        bath = tuple(max(d, *(a[k + 1] for a in auto)) for k, d in enumerate(default_bath_dims(params)))
    return (d_sys, *bath)


# ---------------------------------------------------------------- table


@dataclass
class MetricTable:
    columns: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.columns["t"])
        for c in COLUMNS:
            col = self.columns.get(c)
            self.columns[c] = np.full(n, np.nan) if col is None else np.asarray(col, dtype=float)

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])

    def as_array(self) -> np.ndarray:
        return np.column_stack([self.columns[c] for c in COLUMNS])

    def to_csv(self) -> str:
        lines = [f"# qbmbattery {__version__}"]
        for key, value in self.provenance.items():
            lines.append(f"# {key}: {json.dumps(value, sort_keys=True, separators=(',', ':'))}")
        lines.append(",".join(COLUMNS))
        for row in self.as_array():
            lines.append(",".join("%.17e" % v for v in row))
        return "\n".join(lines) + "\n"

    def write(self, outdir, name: str | None = None) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        if name is None:
            name = f"run-{self.provenance.get('digest', 'table')}.csv"
        path = outdir / name
        path.write_text(self.to_csv())
        return path

    @classmethod
    def read_csv(cls, path) -> "MetricTable":
        prov = {}
        body = []
        for line in Path(path).read_text().splitlines():
            if line.startswith("# ") and ": " in line:
                key, value = line[2:].split(": ", 1)
                prov[key] = json.loads(value)
            elif not line.startswith("#"):
                body.append(line)
        header = body[0].split(",")
        data = np.array([[float(x) for x in row.split(",")] for row in body[1:]]).reshape(-1, len(header))
        return cls({h: data[:, i] for i, h in enumerate(header)}, prov)


# ---------------------------------------------------------------- runs


def _public(trunc: dict) -> dict:
    return {k: v for k, v in trunc.items() if not k.startswith("_")}


MAX_GROWTH = 8


def simulate(cfg: RunConfig, state: InitialState, backend: str, dims=None) -> Trajectory:
    """One trajectory. Fock truncations that were not fixed by hand grow on overflow."""
    times = uniform_grid(cfg.grid.t_max, cfg.grid.dt)
    if backend == "gaussian":
        mean, cov = gaussian_moments(state, cfg.params)
        return simulate_gaussian(mean, cov, cfg.params, times)
    adaptive = dims is None
    dims = list(dims or fock_dims(cfg))
    fixed = {0} if cfg.truncation["system_dim"] is not None else set()
    if cfg.truncation["bath_dims"] is not None:
        fixed |= set(range(1, len(dims)))
    for _ in range(MAX_GROWTH + 1):
        rho0 = fock_density(state, cfg.params, dims[0])
        try:
            return simulate_reduced(rho0, cfg.params, dims, times, overflow=cfg.truncation["overflow"],
                                    max_joint_dim=cfg.truncation["max_joint_dim"],
                                    component_tol=cfg.truncation["component_tol"])
        except TruncationOverflowError as exc:
            if not adaptive or exc.mode in fixed:
                raise
            log.info("mode %d overflowed at truncation %d; retrying with %d", exc.mode, dims[exc.mode],
                     dims[exc.mode] + 1)
            dims[exc.mode] += 1
    raise TruncationOverflowError(f"truncations still overflow after {MAX_GROWTH} enlargements (dims={dims})")


def _metrics_gaussian(traj: Trajectory, cfg: RunConfig, wanted) -> dict:
    w = cfg.params.omega_s
    means, covs = traj.means, traj.covs
    cols = {}
    det = np.linalg.det(covs)
    cols["E"] = 0.5 * w * (np.trace(covs, axis1=1, axis2=2) + np.sum(means**2, axis=1))
    cols["W"] = np.array([gaussian_ergotropy(m, c, w) for m, c in zip(means, covs)])
    cols["nu"] = np.sqrt(det)
    cols["purity"] = 1.0 / (2.0 * np.sqrt(det))
    if {"W_i", "W_c", "C_l1"} & wanted:
        tol = cfg.truncation["metric_tol"]
        states = traj.fock_states(tol=tol, max_dim=cfg.truncation["max_dim"])
        Wi, C = np.empty(len(traj)), np.empty(len(traj))
        for k, rho in enumerate(states):
            H = oscillator_hamiltonian(rho.shape[0], w)
            Wi[k] = incoherent_ergotropy(rho, H)
            C[k] = l1_coherence(rho, H)
        cols["W_i"], cols["W_c"], cols["C_l1"] = Wi, cols["W"] - Wi, C
    return cols


def _metrics_fock(traj: Trajectory, cfg: RunConfig, wanted) -> dict:
    w = cfg.params.omega_s
    H = oscillator_hamiltonian(traj.states[0].shape[0], w)
    n = len(traj)
    E, W, Wi, C, nu, pur = (np.empty(n) for _ in range(6))
    for k, rho in enumerate(traj.states):
        E[k] = energy(rho, H)
        W[k] = ergotropy(rho, H)
        Wi[k] = incoherent_ergotropy(rho, H)
        C[k] = l1_coherence(rho, H)
        _, cov = fock_moments(rho)
        nu[k] = np.sqrt(max(np.linalg.det(cov), 0.0))
        pur[k] = purity(rho)
    return {"E": E, "W": W, "W_i": Wi, "W_c": W - Wi, "C_l1": C, "nu": nu, "purity": pur}


def cross_backend_distance(fock: Trajectory, gauss: Trajectory, tol: float = 1e-12, max_dim: int = 400) -> np.ndarray:
    if not np.array_equal(fock.times, gauss.times):
        raise DimensionMismatchError("trajectories use different time grids")
    out = np.empty(len(fock))
    for k, (a, b) in enumerate(zip(fock.fock_states(), gauss.fock_states(tol=tol, max_dim=max_dim))):
        n = max(a.shape[0], b.shape[0])
        out[k] = trace_distance(fock_embed(a, n), fock_embed(b, n))
    return out


def run(cfg: RunConfig) -> MetricTable:
    """Simulate ``cfg`` and evaluate the requested metric columns at every grid time."""
    wanted = set(cfg.outputs)
    primary = cfg.primary
    traj = simulate(cfg, cfg.initial_state, primary)
    dims = tuple(traj.truncation["dims"]) if primary == "fock" else None
    cols = {"t": traj.times}
    cols.update(_metrics_gaussian(traj, cfg, wanted) if primary == "gaussian" else _metrics_fock(traj, cfg, wanted))
    if len(traj) >= 3:
        cols["P"] = instantaneous_power(cols["W"], traj.times)
        cols["P_av"] = running_average_power(cols["W"], traj.times)
    info = {"primary": _public(traj.truncation)}
    tol, max_dim = cfg.truncation["metric_tol"], cfg.truncation["max_dim"]
    if cfg.pair_state is not None and "D" in wanted:
        pair = simulate(cfg, cfg.pair_state, primary, dims)
        dt = distance_trajectory(traj, pair, tol=tol, max_dim=max_dim)
        cols["D"] = dt.D
        info["pair"] = _public(pair.truncation)
    if cfg.backend == "both" and "D_xb" in wanted:
        fock = simulate(cfg, cfg.initial_state, "fock")
        cols["D_xb"] = cross_backend_distance(fock, traj, tol, max_dim)
        info["fock"] = _public(fock.truncation)
    for c in COLUMNS[1:]:
        if c not in wanted:
            cols.pop(c, None)
    prov = {"config": cfg.to_dict(), "digest": cfg.digest(), "kernels": KERNELS, "truncation": info}
    return MetricTable(cols, prov)


def run_to_file(cfg: RunConfig, outdir) -> Path:
    return run(cfg).write(outdir)


# ---------------------------------------------------------------- sweeps


def sweep_configs(base: RunConfig, axis: str, values) -> list[RunConfig]:
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; choose from {SWEEP_AXES}")
    out = []
    for v in values:
        if axis in ("mu", "mu_tilde", "T", "eta"):
            out.append(base.with_(**{axis: float(v)}))
        elif axis == "N":
            out.append(base.with_(n_modes=int(v), truncation={"bath_dims": None}))
        else:
            if isinstance(v, (list, tuple)):
                dims = [int(d) for d in v]
                trunc = {"system_dim": dims[0], "bath_dims": dims[1:]}
            else:
                trunc = {"bath_dims": [int(v)] * base.params.bath.n_modes}
            out.append(base.with_(truncation=trunc))
    return out


def sweep(base: RunConfig, axis: str, values, workers: int = 1) -> list[MetricTable]:
    """One independent run per value, returned in the order of ``values``."""
    cfgs = sweep_configs(base, axis, values)
    if workers <= 1 or len(cfgs) <= 1:
        return [run(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, cfgs))


# ---------------------------------------------------------------- convergence


@dataclass
class ConvergenceReport:
    tol: float
    deltas: dict
    gated: list
    info: dict

    @property
    def passed(self) -> bool:
        return all(self.deltas[k] <= self.tol for k in self.gated)

    @property
    def worst(self) -> float:
        return max((self.deltas[k] for k in self.gated), default=0.0)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "tol": self.tol, "worst": self.worst, "deltas": self.deltas,
                "gated": self.gated, "info": self.info}


def _max_distance(a: Trajectory, b: Trajectory) -> float:
    worst = 0.0
    for x, y in zip(a.fock_states(), b.fock_states()):
        n = max(x.shape[0], y.shape[0])
        worst = max(worst, trace_distance(fock_embed(x, n), fock_embed(y, n)))
    return worst


def certify_convergence(cfg: RunConfig, tol: float = 1e-4, dt: float | None = None,
                        include_modes: bool = False) -> ConvergenceReport:
    """Refine every truncation knob by one level and measure the largest state change.

    ``system`` and each ``bath_k`` gate the verdict. Adding a bath mode changes
    the discretized bath itself; its delta is reported under ``n_modes`` and
    only gates when ``include_modes`` is set. ``dt`` optionally coarsens the
    grid used for the comparison.
    """
    if cfg.backend not in ("fock", "both"):
        raise ConfigError("convergence certification needs backend 'fock' or 'both'")
    if dt is not None:
        cfg = cfg.with_(grid=type(cfg.grid)(t_max=cfg.grid.t_max, dt=dt))
    base = simulate(cfg, cfg.initial_state, "fock")
    dims = tuple(base.truncation["dims"])
    deltas = {}
    refined = [("system", (dims[0] + 1, *dims[1:]))]
    refined += [(f"bath_{k + 1}", dims[: k + 1] + (dims[k + 1] + 1,) + dims[k + 2:]) for k in range(len(dims) - 1)]
    for name, d in refined:
        deltas[name] = _max_distance(base, simulate(cfg, cfg.initial_state, "fock", d))
    more = cfg.with_(n_modes=cfg.params.bath.n_modes + 1, truncation={"system_dim": dims[0], "bath_dims": None})
    try:
        deltas["n_modes"] = _max_distance(base, simulate(more, more.initial_state, "fock"))
    except Exception as exc:  # capacity limits make this knob optional
        log.warning("n_modes refinement skipped: %s", exc)
        deltas["n_modes"] = float("nan")
    gated = [name for name, _ in refined] + (["n_modes"] if include_modes else [])
    info = {"dims": list(dims), "times": int(len(base)), "dt": cfg.grid.dt}
    # dynamics are exact per time point: a coarser grid only moves the power column
    if len(base) >= 5:
        W = np.array([ergotropy(r, oscillator_hamiltonian(r.shape[0], cfg.params.omega_s)) for r in base.states])
        P_fine = instantaneous_power(W, base.times)
        P_coarse = instantaneous_power(W[::2], base.times[::2])
        info["power_change_dt_doubled"] = float(np.max(np.abs(P_fine[::2] - P_coarse)))
    return ConvergenceReport(tol, deltas, gated, info)
