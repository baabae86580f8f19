"""Distinguishability of two battery trajectories and its revivals."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import positive_runs
from .errors import DimensionMismatchError, InvalidParameterError, PreconditionError
from .hilbert import as_matrix, fock_embed, trace_distance
from .trajectory import Trajectory

REVIVAL_FLOOR = 1e-6


@dataclass(frozen=True)
class Revival:
    t_start: float
    t_end: float
    rise: float
    i_start: int
    i_end: int


@dataclass
class DistanceTrajectory:
    times: np.ndarray
    D: np.ndarray
    floor: float = REVIVAL_FLOOR
    revivals: list = field(default_factory=list)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.D = np.asarray(self.D, dtype=float)
        if len(self.times) != len(self.D):
            raise DimensionMismatchError("times and D differ in length")
        if not self.revivals:
            self.revivals = detect_revivals(self.D, self.times, self.floor)

    def blp(self) -> float:
        return blp_measure(self.D, self.times)

    def contractivity_excess(self) -> float:
        """``max_t D(t) - D(0)``; positive values mean D rose above its start."""
        return float(np.max(self.D) - self.D[0])


def _same_params(p1, p2) -> bool:
    return p1 == p2


def distance_trajectory(traj1: Trajectory, traj2: Trajectory, *, tol: float = 1e-10, max_dim: int = 400,
                        floor: float = REVIVAL_FLOOR) -> DistanceTrajectory:
    """Pointwise trace distance between two trajectories of the same dynamics.

    Gaussian trajectories are converted to Fock matrices at truncation ``tol``;
    both members are zero-padded to a common size before comparison.
    """
    if len(traj1.times) != len(traj2.times) or not np.array_equal(traj1.times, traj2.times):
        raise DimensionMismatchError("trajectories use different time grids")
    if not _same_params(traj1.params, traj2.params):
        raise PreconditionError("trajectories were generated with different model parameters")
    s1 = traj1.fock_states(tol=tol, max_dim=max_dim)
    s2 = traj2.fock_states(tol=tol, max_dim=max_dim)
    D = np.empty(len(traj1.times))
    for k, (a, b) in enumerate(zip(s1, s2)):
        a, b = as_matrix(a), as_matrix(b)
        n = max(a.shape[0], b.shape[0])
        D[k] = trace_distance(fock_embed(a, n), fock_embed(b, n))
    return DistanceTrajectory(traj1.times, D, floor)


def detect_revivals(D, times, floor: float = REVIVAL_FLOOR) -> list[Revival]:
    """Maximal stretches where ``D`` increases, bridging single-sample dips shallower than ``floor``.

    Stretches whose summed rise does not exceed ``floor`` are dropped.
    """
    if floor <= 0:
        raise InvalidParameterError("revival floor must be positive")
    D = np.asarray(D, dtype=float)
    times = np.asarray(times, dtype=float)
    if len(D) != len(times):
        raise DimensionMismatchError("D and times differ in length")
    if len(D) < 2:
        return []
    starts, ends, rises = positive_runs(np.diff(D), floor)
    return [Revival(float(times[s]), float(times[e]), float(r), int(s), int(e)) for s, e, r in zip(starts, ends, rises)]


def blp_measure(D, times=None) -> float:
    """Total increase of ``D``: the sum of its positive increments over the grid."""
    D = np.asarray(D, dtype=float)
    if len(D) < 3:
        raise InvalidParameterError("need at least 3 samples")
    if times is not None and len(times) != len(D):
        raise DimensionMismatchError("D and times differ in length")
    inc = np.diff(D)
    return float(inc[inc > 0].sum())
