"""Operator algebra on truncated Fock spaces.

Everything is dense. Operators carry the per-mode truncation ``dims`` so that
partial traces and tensor products know the mode layout; the matrix side is
always ``prod(dims)``.
"""

from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidDimensionError,
    InvalidParameterError,
    PreconditionError,
)

HERMITIAN_ATOL = 1e-12


class Operator:
    """Dense square matrix on a tensor product of truncated modes."""

    __slots__ = ("matrix", "dims")
    __array_priority__ = 100

    def __init__(self, matrix, dims: Sequence[int] | None = None):
        matrix = np.asarray(matrix, dtype=np.complex128)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"operator matrix must be square, got shape {matrix.shape}")
        if dims is None:
            dims = (matrix.shape[0],)
        dims = tuple(int(d) for d in dims)
        if any(d < 1 for d in dims):
            raise InvalidDimensionError(f"mode dimensions must be positive, got {dims}")
        if int(np.prod(dims)) != matrix.shape[0]:
            raise DimensionMismatchError(f"matrix side {matrix.shape[0]} != prod(dims) for dims={dims}")
        self.matrix = matrix
        self.dims = dims

    # numpy interop
    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return type(self)._raw(self.matrix.conj().T, self.dims)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def expect(self, other) -> complex:
        """``tr(self @ other)``."""
        other = np.asarray(other)
        return complex(np.einsum("ij,ji->", self.matrix, other))

    def hermiticity_error(self) -> float:
        if self.matrix.size == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_hermitian(self, atol: float = HERMITIAN_ATOL) -> bool:
        return self.hermiticity_error() <= atol * max(1.0, float(np.max(np.abs(self.matrix))))

    @classmethod
    def _raw(cls, matrix, dims):
        obj = object.__new__(cls)
        obj.matrix = matrix
        obj.dims = dims
        return obj

    def _coerce(self, other):
        if isinstance(other, Operator):
            if other.dims != self.dims:
                raise DimensionMismatchError(f"dims {self.dims} vs {other.dims}")
            return other.matrix
        return other

    def __add__(self, other):
        if np.isscalar(other):
            return Operator(self.matrix + other * np.eye(self.size), self.dims)
        return Operator(self.matrix + self._coerce(other), self.dims)

    __radd__ = __add__

    def __sub__(self, other):
        if np.isscalar(other):
            return Operator(self.matrix - other * np.eye(self.size), self.dims)
        return Operator(self.matrix - self._coerce(other), self.dims)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return Operator(-self.matrix, self.dims)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Operator(self.matrix * scalar, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.matrix / scalar, self.dims)

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.matrix @ self._coerce(other), self.dims)
        return self.matrix @ np.asarray(other)

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.dims})"


class DensityMatrix(Operator):
    """An :class:`Operator` that is a physical state."""

    __slots__ = ()

    def check(self, herm_atol: float = HERMITIAN_ATOL, trace_atol: float = 1e-10, psd_atol: float = 1e-10):
        """Raise :class:`PreconditionError` unless the matrix is a valid state."""
        if not self.is_hermitian(herm_atol):
            raise PreconditionError(f"state not Hermitian (max |rho - rho^dag| = {self.hermiticity_error():.3e})")
        tr = self.trace()
        if abs(tr - 1.0) > trace_atol:
            raise PreconditionError(f"state trace {tr.real:.15g} differs from 1")
        lo = float(np.linalg.eigvalsh(self.matrix)[0])
        if lo < -psd_atol:
            raise PreconditionError(f"state has negative eigenvalue {lo:.3e}")
        return self

    @classmethod
    def from_vector(cls, psi, dims: Sequence[int] | None = None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128).ravel()
        return cls(np.outer(psi, psi.conj()), dims)


def as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, Operator) else np.asarray(op)


def destroy(dim: int) -> Operator:
    """Annihilation operator with ``<n-1|a|n> = sqrt(n)``."""
    dim = int(dim)
    if dim < 2:
        raise InvalidDimensionError(f"mode dimension must be >= 2, got {dim}")
    return Operator(np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1), (dim,))


def number(dim: int) -> Operator:
    return Operator(np.diag(np.arange(dim, dtype=float)), (dim,))


def identity(dims: int | Sequence[int]) -> Operator:
    dims = (dims,) if np.isscalar(dims) else tuple(dims)
    return Operator(np.eye(int(np.prod(dims))), dims)


def quadratures(dim: int, m: float = 1.0, omega: float = 1.0) -> tuple[Operator, Operator]:
    """Position and momentum of an oscillator of mass ``m`` and frequency ``omega`` (hbar = 1)."""
    if m <= 0 or omega <= 0:
        raise InvalidParameterError(f"mass and frequency must be positive (m={m}, omega={omega})")
    a = destroy(dim).matrix
    ad = a.conj().T
    q = (a + ad) / np.sqrt(2.0 * m * omega)
    p = 1j * np.sqrt(m * omega / 2.0) * (ad - a)
    return Operator(q, (dim,)), Operator(p, (dim,))


def tensor(factors: Iterable[Operator]) -> Operator:
    """Kronecker product in the given mode order."""
    factors = [f if isinstance(f, Operator) else Operator(f) for f in factors]
    if not factors:
        raise InvalidParameterError("tensor() needs at least one factor")
    mat = reduce(np.kron, (f.matrix for f in factors))
    dims = tuple(d for f in factors for d in f.dims)
    cls = DensityMatrix if all(isinstance(f, DensityMatrix) for f in factors) else Operator
    return cls(mat, dims)


def embed(op: Operator, index: int, dims: Sequence[int]) -> Operator:
    """Lift a single-mode operator onto mode ``index`` of a product space."""
    dims = tuple(dims)
    if op.size != dims[index]:
        raise DimensionMismatchError(f"operator side {op.size} != dims[{index}] = {dims[index]}")
    left = int(np.prod(dims[:index]))
    right = int(np.prod(dims[index + 1 :]))
    mat = np.kron(np.kron(np.eye(left), op.matrix), np.eye(right))
    return Operator(mat, dims)


def partial_trace(state: Operator, keep: Iterable[int]) -> Operator:
    """Reduce ``state`` onto the modes in ``keep`` (returned in ascending mode order)."""
    dims = state.dims
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise InvalidParameterError("keep must name at least one mode")
    for k in keep:
        if not 0 <= k < n:
            raise IndexError(f"mode index {k} out of range for {n} modes")
    if len(keep) == n:
        return type(state)(state.matrix.copy(), dims)
    drop = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))
    dd = int(np.prod([dims[k] for k in drop]))
    t = state.matrix.reshape(dims + dims)
    perm = keep + drop
    t = t.transpose(perm + [p + n for p in perm]).reshape(dk, dd, dk, dd)
    red = np.einsum("ajbj->ab", t)
    cls = DensityMatrix if isinstance(state, DensityMatrix) else Operator
    return cls(red, tuple(dims[k] for k in keep))


def herm_eig(op) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvector columns of a Hermitian operator.

    Within degenerate blocks the basis is arbitrary.
    """
    mat = as_matrix(op)
    scale = max(1.0, float(np.max(np.abs(mat)))) if mat.size else 1.0
    err = float(np.max(np.abs(mat - mat.conj().T))) if mat.size else 0.0
    if err > HERMITIAN_ATOL * scale:
        raise PreconditionError(f"herm_eig needs a Hermitian operator (asymmetry {err:.3e})")
    mat = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(mat)
    order = np.argsort(vals, kind="stable")
    return vals[order], vecs[:, order]


class UnitaryPropagator:
    """``exp(-iHt)`` from one eigendecomposition, reused for every ``t``."""

    def __init__(self, H):
        self.dims = H.dims if isinstance(H, Operator) else (as_matrix(H).shape[0],)
        self.energies, self.vectors = herm_eig(H)

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T

    def evolve(self, rho0, t: float) -> DensityMatrix:
        V = self.vectors
        rt = V.conj().T @ as_matrix(rho0) @ V
        ph = np.exp(-1j * self.energies * t)
        rt = ph[:, None] * rt * ph.conj()[None, :]
        return DensityMatrix(V @ rt @ V.conj().T, self.dims)


def evolve_unitary(H, rho0, t: float) -> DensityMatrix:
    """``U rho0 U^dag`` with ``U = exp(-iHt)``."""
    if t == 0:
        return DensityMatrix(as_matrix(rho0).copy(), getattr(rho0, "dims", None))
    return UnitaryPropagator(H).evolve(rho0, t)


def trace_distance(rho1, rho2) -> float:
    """Half the trace norm of ``rho1 - rho2``."""
    a = as_matrix(rho1)
    b = as_matrix(rho2)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"trace_distance on shapes {a.shape} and {b.shape}")
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return float(min(1.0, 0.5 * np.sum(np.abs(np.linalg.eigvalsh(diff)))))


def fock_embed(rho, dim: int) -> np.ndarray:
    """Zero-pad a single-mode matrix to side ``dim`` (exact embedding of truncated states)."""
    mat = as_matrix(rho)
    if mat.shape[0] == dim:
        return mat
    if mat.shape[0] > dim:
        raise DimensionMismatchError(f"cannot embed side {mat.shape[0]} into {dim}")
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[: mat.shape[0], : mat.shape[0]] = mat
    return out


def coherent_vector(alpha: complex, dim: int) -> np.ndarray:
    """Fock amplitudes of ``|alpha>`` on the lowest ``dim`` levels (not renormalized)."""
    from scipy.special import gammaln

    n = np.arange(dim)
    alpha = complex(alpha)
    if alpha == 0:
        return (n == 0).astype(np.complex128)
    logmag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: complex, dim: int) -> DensityMatrix:
    psi = coherent_vector(alpha, dim)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix.from_vector(psi)


def fock_state(n: int, dim: int) -> DensityMatrix:
    if not 0 <= n < dim:
        raise InvalidParameterError(f"Fock level {n} outside truncation {dim}")
    psi = np.zeros(dim, dtype=np.complex128)
    psi[n] = 1.0
    return DensityMatrix.from_vector(psi)


def fock_moments(rho) -> tuple[np.ndarray, np.ndarray]:
    """Mean and symmetrized covariance of the dimensionless quadratures ``x, y`` of a one-mode state.

    Convention: ``x = (a + a^dag)/sqrt(2)``, ``y = (a - a^dag)/(i sqrt(2))``, vacuum covariance ``I/2``.
    """
    mat = as_matrix(rho)
    d = mat.shape[0]
    a = np.diag(np.sqrt(np.arange(1, d, dtype=float)), 1)
    ea = np.einsum("ij,ji->", mat, a)
    ea2 = np.einsum("ij,ji->", mat, a @ a)
    en = float(np.real(np.einsum("ii,i->", mat, np.arange(d, dtype=float))))
    mean = np.sqrt(2.0) * np.array([ea.real, ea.imag])
    # <x^2> = (<a^2> + <a^dag^2> + 2<n> + 1)/2 etc.
    xx = 0.5 * (2 * ea2.real + 2 * en + 1)
    yy = 0.5 * (-2 * ea2.real + 2 * en + 1)
    xy = ea2.imag
    cov = np.array([[xx, xy], [xy, yy]]) - np.outer(mean, mean)
    return mean, cov
