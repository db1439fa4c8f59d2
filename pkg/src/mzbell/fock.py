"""Dense linear algebra on truncated Fock spaces.

Every state and operator carries an explicit truncation dimension and all
binary operations check that the dimensions agree.  Composite (two-mode)
indices are row-major throughout the package: the pair (i, j) on factor
dims (d1, d2) maps to the flat index i*d2 + j.  Partial-trace correctness
depends on this single convention, so no other ordering is exposed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# Default tolerances.  Algebraic identities (hermiticity, trace, round
# trips) must hold far below the truncation error that dominates the
# physics modules; eigensolver residuals are held to a looser bar.
ALGEBRA_TOL = 1e-12
EIG_RESIDUAL_TOL = 1e-9
HERMITICITY_TOL = 1e-10

# Dense desk-scale ceiling: largest composite dimension a tensor product
# may produce before we refuse to allocate.
MAX_COMPOSITE_DIM = 4096


class TruncationWarning(UserWarning):
    """Amplitude has leaked past the retained Fock levels."""


@dataclass(frozen=True)
class FockSpace:
    """Single-mode Fock space truncated to occupation levels 0..dim-1."""

    dim: int

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ValueError(f"truncation dim must be a positive integer, got {self.dim!r}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=complex, copy=True)
    if not np.all(np.isfinite(out.view(np.float64))):
        raise ValueError("non-finite entries")
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over a truncated Fock basis.

    The norm is reported, never silently fixed: callers that need a
    normalized state must divide by ``norm`` themselves.
    """

    space: FockSpace
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _freeze(self.amplitudes)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"amplitude shape {amps.shape} does not match dim {self.space.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_error(self) -> float:
        """Deviation of the norm from 1."""
        return abs(self.norm - 1.0)

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.space, self.amplitudes / n)

    def projector(self) -> "DensityOperator":
        return DensityOperator(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class LinearOperator:
    """Dense complex matrix on a truncated Fock space."""

    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = _freeze(self.matrix)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dim {d}")
        object.__setattr__(self, "matrix", mat)

    def dagger(self) -> "LinearOperator":
        return LinearOperator(self.space, self.matrix.conj().T)

    def hermiticity_defect(self) -> float:
        """Max-entry deviation from M = M^dagger, relative to the entry scale."""
        return _hermiticity_defect(self.matrix)

    def apply(self, psi: StateVector) -> StateVector:
        if psi.space.dim != self.space.dim:
            raise ValueError("operator and state dims differ")
        return StateVector(self.space, self.matrix @ psi.amplitudes)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace (up to reported deviation) operator.

    Hermiticity is enforced at construction; the trace deviation and the
    most negative eigenvalue are reported through properties rather than
    silently repaired.
    """

    space: FockSpace
    matrix: np.ndarray

    def __post_init__(self):
        mat = _freeze(self.matrix)
        d = self.space.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dim {d}")
        defect = _hermiticity_defect(mat)
        if defect > ALGEBRA_TOL:
            raise ValueError(f"density matrix not Hermitian: relative defect {defect:.3e}")
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    @property
    def trace_error(self) -> float:
        return abs(self.trace - 1.0)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])


def _hermiticity_defect(mat: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(mat))) if mat.size else 1.0)
    return float(np.max(np.abs(mat - mat.conj().T))) / scale


def _as_matrix(op) -> np.ndarray:
    if isinstance(op, (LinearOperator, DensityOperator)):
        return op.matrix
    return np.asarray(op, dtype=complex)


def basis_state(space: FockSpace, n: int) -> StateVector:
    """Occupation-number basis vector |n>."""
    if not 0 <= n < space.dim:
        raise ValueError(f"level {n} outside 0..{space.dim - 1}")
    amps = np.zeros(space.dim, dtype=complex)
    amps[n] = 1.0
    return StateVector(space, amps)


def tensor_product(a, b, max_dim: int = MAX_COMPOSITE_DIM):
    """Tensor product of two states or two operators (row-major indexing).

    The composite index of (i, j) is i*dim_b + j, matching ``np.kron``.
    Refuses composite dimensions above ``max_dim``.
    """
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        d = a.space.dim * b.space.dim
        if d > max_dim:
            raise ValueError(f"composite dim {d} exceeds maximum {max_dim}")
        return StateVector(FockSpace(d), np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, (LinearOperator, DensityOperator)) and isinstance(b, type(a)):
        d = a.space.dim * b.space.dim
        if d > max_dim:
            raise ValueError(f"composite dim {d} exceeds maximum {max_dim}")
        cls = type(a)
        return cls(FockSpace(d), np.kron(a.matrix, b.matrix))
    raise TypeError("tensor_product needs two StateVectors or two operators of the same kind")


def partial_trace(rho: DensityOperator, keep: int, dims: tuple[int, int]) -> DensityOperator:
    """Trace out one factor of a bipartite density operator.

    Args:
        rho: density operator on the composite (row-major) space.
        keep: 0 to keep the first factor, 1 to keep the second.
        dims: factor dimensions (d1, d2) with d1*d2 == rho dim.
    """
    d1, d2 = dims
    if d1 * d2 != rho.space.dim:
        raise ValueError(f"factor dims {dims} do not compose to {rho.space.dim}")
    if keep not in (0, 1):
        raise ValueError("keep must be 0 or 1")
    blocks = rho.matrix.reshape(d1, d2, d1, d2)
    if keep == 0:
        reduced = np.einsum("ijkj->ik", blocks)
        d = d1
    else:
        reduced = np.einsum("ijil->jl", blocks)
        d = d2
    # einsum preserves hermiticity only up to rounding; symmetrize the
    # last few ulps so downstream eigensolves see an exactly Hermitian input
    reduced = 0.5 * (reduced + reduced.conj().T)
    return DensityOperator(FockSpace(d), reduced)


def hermitian_eigensystem(op, tol: float = HERMITICITY_TOL):
    """Eigenvalues (ascending) and orthonormal eigenvector columns.

    Rejects inputs whose hermiticity defect exceeds ``tol``, reporting the
    measured deviation.
    """
    mat = _as_matrix(op)
    defect = _hermiticity_defect(mat)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian: relative defect {defect:.3e} > {tol:.1e}")
    vals, vecs = np.linalg.eigh(mat)
    return vals, vecs


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b)."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise ValueError(f"shape mismatch {ma.shape} vs {mb.shape}")
    return complex(np.vdot(ma, mb))


def hs_distance(a, b) -> float:
    """Frobenius distance sqrt(Tr((a-b)^dagger (a-b)))."""
    return float(np.linalg.norm(_as_matrix(a) - _as_matrix(b)))


def warn_truncation(message: str) -> None:
    warnings.warn(message, TruncationWarning, stacklevel=3)
