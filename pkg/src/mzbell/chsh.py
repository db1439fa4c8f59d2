"""Click/no-click CHSH witness for two displaced-detection laboratories.

Each laboratory measures A(beta) = I - 2|beta><beta|, assigning -1 to "no
photons" in the displaced frame.  For a setting pair the physics lives in
a 3-dimensional effective space (the span of the two coherent vectors plus
one orthogonal direction), so the nonlocal operator is 9x9 and depends
only on the overlaps E = exp(-|beta - beta'|^2) of each laboratory.

Ground truth for the maximal eigenvalue is the eigensolver.  Two closed
forms are carried alongside: the square-root form, which matches the
eigensolver everywhere and reaches 2 sqrt(2) at E1 = E2 = 1/2, and the
fourth-root variant found in print, which evaluates to 2 sqrt(3) at the
same point and is reported as inconsistent rather than silently fixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fock import FockSpace, LinearOperator, StateVector
from .optics import coherent_state

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2
OPTIMAL_SEPARATION_SQ = math.log(2.0)
COHERENT_TAIL_MAX = 1e-8


def observable_pair(e: float) -> tuple[np.ndarray, np.ndarray]:
    """3x3 matrices of the two click observables of one laboratory in its
    effective basis: the reference diag(-1, 1, 1) and its partner at
    overlap E = e.  Both are involutions with spectrum {-1, 1, 1}."""
    if not 0.0 < e <= 1.0:
        raise ValueError(f"overlap E must lie in (0, 1], got {e}")
    a_ref = np.diag([-1.0, 1.0, 1.0]).astype(complex)
    off = -2.0 * math.sqrt(e * (1.0 - e))
    a_e = np.array(
        [[1.0 - 2.0 * e, off, 0.0], [off, -1.0 + 2.0 * e, 0.0], [0.0, 0.0, 1.0]],
        dtype=complex,
    )
    return a_ref, a_e


def chsh_operator(e1: float, e2: float) -> np.ndarray:
    """9x9 nonlocal operator A1 B1 + A2 B1 + A1 B2 - A2 B2 on the row-major
    product of the two effective bases."""
    a1, a2 = observable_pair(e1)
    b1, b2 = observable_pair(e2)
    return np.kron(a1, b1) + np.kron(a2, b1) + np.kron(a1, b2) - np.kron(a2, b2)


def lambda_corrected(e1: float, e2: float) -> float:
    """Square-root closed form 2 sqrt(1 + 4 sqrt(E1(1-E1)) sqrt(E2(1-E2)))."""
    return 2.0 * math.sqrt(
        1.0 + 4.0 * math.sqrt(e1 * (1.0 - e1)) * math.sqrt(e2 * (1.0 - e2))
    )


def lambda_paper_form(e1: float, e2: float) -> float:
    """Fourth-root variant as typeset; kept verbatim for comparison only.
    At E1 = E2 = 1/2 it gives 2 sqrt(3), contradicting the Tsirelson value
    the eigensolver (and the square-root form) produce."""
    return 2.0 * math.sqrt(
        1.0 + 4.0 * (e1 * (1.0 - e1)) ** 0.25 * (e2 * (1.0 - e2)) ** 0.25
    )


def lambda_max(e1: float, e2: float, method: str = "eigensolver") -> float:
    if method == "eigensolver":
        return float(np.linalg.eigvalsh(chsh_operator(e1, e2))[-1])
    if method == "closed_form_corrected":
        return lambda_corrected(e1, e2)
    if method == "closed_form_paper":
        return lambda_paper_form(e1, e2)
    raise ValueError(f"unknown method {method!r}")


def _observable_stack(values: np.ndarray) -> np.ndarray:
    """A(E) for every E in ``values``, shape (len(values), 3, 3)."""
    out = np.zeros((len(values), 3, 3), dtype=complex)
    off = -2.0 * np.sqrt(values * (1.0 - values))
    out[:, 0, 0] = 1.0 - 2.0 * values
    out[:, 1, 1] = -1.0 + 2.0 * values
    out[:, 0, 1] = off
    out[:, 1, 0] = off
    out[:, 2, 2] = 1.0
    return out


def lambda_max_grid(grid_n: int = 99):
    """Eigensolver maxima on the open-interval grid E = k/(grid_n+1).

    Returns (values, lam) with lam[i, j] = lambda_max(values[i], values[j]).
    The grid of 9x9 operators is assembled by broadcasting so the batched
    eigensolver dominates the cost.
    """
    values = np.arange(1, grid_n + 1) / (grid_n + 1.0)
    a_ref = np.diag([-1.0, 1.0, 1.0]).astype(complex)
    a_e = _observable_stack(values)

    def kron_batched(a, b, shape):
        return np.einsum("...ab,...cd->...acbd", a, b).reshape(*shape, 9, 9)

    fixed = np.kron(a_ref, a_ref)
    left = kron_batched(a_e, np.broadcast_to(a_ref, a_e.shape), (grid_n,))
    right = kron_batched(np.broadcast_to(a_ref, a_e.shape), a_e, (grid_n,))
    both = kron_batched(a_e[:, None], a_e[None, :], (grid_n, grid_n))
    stack = fixed[None, None] + left[:, None] + right[None, :] - both
    lam = np.linalg.eigvalsh(stack.reshape(-1, 9, 9))[:, -1].reshape(grid_n, grid_n)
    return values, lam


@dataclass(frozen=True)
class OptimalSettings:
    e1: float
    e2: float
    separation_sq: float
    lam: float
    grid_n: int


def optimal_settings(grid_n: int = 99) -> OptimalSettings:
    """Argmax of the eigensolver maximum over the (0,1)^2 overlap grid.

    The center E1 = E2 = 1/2 wins, corresponding to |beta - beta'|^2 = ln 2
    in both laboratories and lambda = 2 sqrt(2).
    """
    values, lam = lambda_max_grid(grid_n)
    i, j = np.unravel_index(int(np.argmax(lam)), lam.shape)
    return OptimalSettings(
        e1=float(values[i]),
        e2=float(values[j]),
        separation_sq=OPTIMAL_SEPARATION_SQ,
        lam=float(lam[i, j]),
        grid_n=grid_n,
    )


def maximal_state(e1: float = 0.5, e2: float = 0.5, tol: float = 1e-9) -> np.ndarray:
    """Unit 9-vector maximizing the witness at the optimal settings.

    Components (-1, 1-sqrt2, 0, 1-sqrt2, 1, 0, 0, 0, 0)/(2 sqrt(2-sqrt2));
    raises when called away from E1 = E2 = 1/2, where this vector is no
    longer the top eigenvector.
    """
    if abs(e1 - 0.5) > tol or abs(e2 - 0.5) > tol:
        raise ValueError("maximal state is defined at the optimum E1 = E2 = 1/2 only")
    scale = 1.0 / (2.0 * math.sqrt(2.0 - SQRT2))
    vec = np.array([-1.0, 1.0 - SQRT2, 0.0, 1.0 - SQRT2, 1.0, 0.0, 0.0, 0.0, 0.0])
    return (scale * vec).astype(complex)


@dataclass(frozen=True)
class ChshConfig:
    """Displacement quadruple: (beta1, beta2) for laboratory A and
    (beta3, beta4) for laboratory B."""

    beta1: complex
    beta2: complex
    beta3: complex
    beta4: complex

    @property
    def e1(self) -> float:
        return math.exp(-abs(self.beta1 - self.beta2) ** 2)

    @property
    def e2(self) -> float:
        return math.exp(-abs(self.beta3 - self.beta4) ** 2)

    @property
    def phi1(self) -> float:
        """Phase of <beta1|beta2>, which is Im(conj(beta1) beta2)."""
        return float(np.imag(np.conj(self.beta1) * self.beta2))

    @property
    def phi2(self) -> float:
        return float(np.imag(np.conj(self.beta3) * self.beta4))

    @classmethod
    def optimal_real(cls) -> "ChshConfig":
        """beta1 = beta3 = 0, beta2 = beta4 = sqrt(ln 2): all phases zero."""
        s = math.sqrt(OPTIMAL_SEPARATION_SQ)
        return cls(0.0, complex(s), 0.0, complex(s))


def _normalized_coherent(beta: complex, space: FockSpace) -> tuple[np.ndarray, float]:
    """Truncated coherent amplitudes scaled to unit norm, plus the mass the
    truncation dropped."""
    raw = coherent_state(beta, space).amplitudes
    norm_sq = float(np.real(np.vdot(raw, raw)))
    return raw / math.sqrt(norm_sq), abs(1.0 - norm_sq)


def click_observable(beta: complex, space: FockSpace) -> LinearOperator:
    """A(beta) = I - 2 |beta><beta| on the truncated space, with |beta>
    normalized at the working truncation."""
    v, _ = _normalized_coherent(beta, space)
    return LinearOperator(space, np.eye(space.dim, dtype=complex) - 2.0 * np.outer(v, v.conj()))


def chsh_fock_operator(config: ChshConfig, space: FockSpace) -> np.ndarray:
    """Full two-mode witness in the truncated Fock representation."""
    a1 = click_observable(config.beta1, space).matrix
    a2 = click_observable(config.beta2, space).matrix
    b1 = click_observable(config.beta3, space).matrix
    b2 = click_observable(config.beta4, space).matrix
    return np.kron(a1, b1) + np.kron(a2, b1) + np.kron(a1, b2) - np.kron(a2, b2)


def effective_basis(beta_a: complex, beta_b: complex, space: FockSpace) -> np.ndarray:
    """Orthonormal triple (|beta_a>, Gram-Schmidt partner, one orthogonal
    direction) as rows; the overlap entering the observables is taken from
    the truncated vectors themselves to cancel truncation bias."""
    c1, _ = _normalized_coherent(beta_a, space)
    c2, _ = _normalized_coherent(beta_b, space)
    g = complex(np.vdot(c1, c2))
    e2 = (c2 - g * c1) / math.sqrt(max(1.0 - abs(g) ** 2, 1e-300))
    for probe_level in range(space.dim):
        probe = np.zeros(space.dim, dtype=complex)
        probe[probe_level] = 1.0
        probe -= np.vdot(c1, probe) * c1 + np.vdot(e2, probe) * e2
        residual = np.linalg.norm(probe)
        if residual > 0.5:
            return np.stack([c1, e2, probe / residual])
    raise ValueError("could not build a third orthogonal direction")


def lambda_max_fock(config: ChshConfig, space: FockSpace) -> float:
    """Eigensolver maximum of the Fock-embedded witness, computed on its
    invariant 3x3 (x) 3x3 block.

    A(beta) acts as +1 outside the effective span, so the restriction is
    exact: the complementary blocks only contribute eigenvalues in [-2, 2].
    """
    basis_a = effective_basis(config.beta1, config.beta2, space)
    basis_b = effective_basis(config.beta3, config.beta4, space)

    def restricted(beta: complex, basis: np.ndarray) -> np.ndarray:
        v, _ = _normalized_coherent(beta, space)
        coeffs = basis.conj() @ v
        return np.eye(3, dtype=complex) - 2.0 * np.outer(coeffs, coeffs.conj())

    a1 = restricted(config.beta1, basis_a)
    a2 = restricted(config.beta2, basis_a)
    b1 = restricted(config.beta3, basis_b)
    b2 = restricted(config.beta4, basis_b)
    s9 = np.kron(a1, b1) + np.kron(a2, b1) + np.kron(a1, b2) - np.kron(a2, b2)
    return float(np.linalg.eigvalsh(s9)[-1])


def coherent_state_form(config: ChshConfig, space: FockSpace) -> StateVector:
    """Maximally violating state assembled from the four coherent vectors.

    Requires |beta1-beta2|^2 = |beta3-beta4|^2 = ln 2 (so E = 1/2 on both
    sides) and refuses when any truncated coherent vector has dropped more
    than 1e-8 of its mass.  The phase factors use the truncated overlap
    phases, which makes the combination an exact rewrite of the effective
    basis construction at the working truncation.
    """
    for pair in ((config.beta1, config.beta2), (config.beta3, config.beta4)):
        sep = abs(pair[0] - pair[1]) ** 2
        if abs(sep - OPTIMAL_SEPARATION_SQ) > 1e-9:
            raise ValueError(f"separation |db|^2 = {sep:.6f} is not ln 2")
    vecs = {}
    for name, beta in (("b1", config.beta1), ("b2", config.beta2),
                       ("b3", config.beta3), ("b4", config.beta4)):
        v, tail = _normalized_coherent(beta, space)
        if tail > COHERENT_TAIL_MAX:
            raise ValueError(f"coherent truncation tail {tail:.2e} exceeds {COHERENT_TAIL_MAX:.0e}")
        vecs[name] = v
    g1 = complex(np.vdot(vecs["b1"], vecs["b2"]))
    g2 = complex(np.vdot(vecs["b3"], vecs["b4"]))
    ph1 = g1 / abs(g1)
    ph2 = g2 / abs(g2)
    u_a = (1.0 - ph1 - SQRT2) * vecs["b1"] + SQRT2 * vecs["b2"]
    u_b = (1.0 - ph2 - SQRT2) * vecs["b3"] + SQRT2 * vecs["b4"]
    scale = 1.0 / (2.0 * math.sqrt(2.0 - SQRT2))
    amps = scale * (np.kron(u_a, u_b) - 2.0 * (2.0 - SQRT2) * np.kron(vecs["b1"], vecs["b3"]))
    return StateVector(FockSpace(space.dim**2), amps)


def _phase_aligned_basis(beta_a: complex, beta_b: complex, space: FockSpace) -> np.ndarray:
    """Effective basis with the Gram-Schmidt vector rotated so the partner
    observable takes the real matrix form for any overlap phase.

    Without this rotation the operator picks up a diagonal phase twist
    exp(i phi) on its off-diagonal and the real-coefficient maximal vector
    stops being the top eigenvector.
    """
    rows = effective_basis(beta_a, beta_b, space).copy()
    c1, _ = _normalized_coherent(beta_a, space)
    c2, _ = _normalized_coherent(beta_b, space)
    g = complex(np.vdot(c1, c2))
    rows[1] = rows[1] * (g / abs(g)).conjugate()
    return rows


def embedded_maximal_state(config: ChshConfig, space: FockSpace) -> StateVector:
    """Tensor-basis maximal state pushed through the effective-basis
    isometry into the two-mode Fock space, valid for any overlap phases."""
    basis_a = _phase_aligned_basis(config.beta1, config.beta2, space)
    basis_b = _phase_aligned_basis(config.beta3, config.beta4, space)
    coeffs = maximal_state().reshape(3, 3)
    amps = np.einsum("ij,ia,jb->ab", coeffs, basis_a, basis_b).reshape(-1)
    return StateVector(FockSpace(space.dim**2), amps)


def fock_expectation(state: StateVector, operator: np.ndarray) -> float:
    """<psi|O|psi> / <psi|psi> for a Hermitian two-mode operator."""
    v = state.amplitudes
    return float(np.real(np.vdot(v, operator @ v) / np.vdot(v, v)))
