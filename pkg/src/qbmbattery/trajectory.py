"""Time series of reduced battery states, in Fock or Gaussian form."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bath import ModelParams
from .errors import PreconditionError


@dataclass
class Trajectory:
    """Reduced battery states on a time grid.

    Fock-backend trajectories fill ``states``; Gaussian-backend trajectories fill
    ``means`` (T x 2) and ``covs`` (T x 2 x 2) and convert to Fock on demand.
    """

    times: np.ndarray
    params: ModelParams
    states: list | None = None
    means: np.ndarray | None = None
    covs: np.ndarray | None = None
    backend: str = "fock"
    truncation: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        check_grid(self.times)
        n = len(self.times)
        if self.states is not None and len(self.states) != n:
            raise PreconditionError(f"{len(self.states)} states for {n} times")
        if self.means is not None and len(self.means) != n:
            raise PreconditionError(f"{len(self.means)} means for {n} times")

    def __len__(self):
        return len(self.times)

    @property
    def is_gaussian(self) -> bool:
        return self.means is not None

    def fock_states(self, tol: float = 1e-6, max_dim: int = 400, dim: int | None = None):
        """Fock density matrices, converting Gaussian moments if needed (cached per tolerance)."""
        if self.states is not None and not self.is_gaussian:
            return self.states
        key = (tol, max_dim, dim)
        cache = self.truncation.setdefault("_fock_cache", {})
        if key not in cache:
            from .gaussian import gaussian_to_fock

            cache[key] = [gaussian_to_fock(m, c, dim=dim, tol=tol, max_dim=max_dim) for m, c in zip(self.means, self.covs)]
        return cache[key]


def check_grid(times) -> None:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise PreconditionError("time grid must be a non-empty 1-D sequence")
    if times[0] != 0.0:
        raise PreconditionError(f"time grid must start at 0, starts at {times[0]}")
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise PreconditionError("time grid must be strictly ascending")


def uniform_grid(t_max: float, dt: float) -> np.ndarray:
    """``0, dt, 2dt, ...`` up to ``t_max`` inclusive (within rounding)."""
    if dt <= 0 or t_max < dt:
        raise PreconditionError(f"need dt > 0 and t_max >= dt (t_max={t_max}, dt={dt})")
    n = int(np.floor(t_max / dt + 1e-9))
    return dt * np.arange(n + 1)
