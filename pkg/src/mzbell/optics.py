"""Beam-splitter and Mach-Zehnder scattering, displacement operators,
and coherent / displaced-number states on truncated Fock spaces.

Displacement convention: D(beta) = exp(beta a^dag - conj(beta) a), with no
alternative operator orderings exposed.  Writing D(beta)|n> = sum_k
C[n, k] |k>, the operator matrix has entry (k, n) = C[n, k], so column n
of the matrix is the displaced number state.

Three independent constructions of the matrix are provided:

* ``direct``      - per-entry evaluation of the finite double-factorial sum,
* ``factorized``  - product of the two triangular exponential factors
                    exp(beta a^dag) and exp(-conj(beta) a),
* ``laguerre``    - closed form with associated Laguerre polynomials built
                    by upward recurrence.

``direct`` and ``factorized`` share the textbook sum and lose precision to
cancellation once indices pass the interior margin (roughly
min(n, k) * |beta|^2 large); the Laguerre recurrence is stable there and is
the default.  All factorial ratios are assembled in log-Gamma form.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .fock import FockSpace, LinearOperator, StateVector, warn_truncation

STOKES_TOL = 1e-9


@dataclass(frozen=True)
class BeamSplitterParams:
    """Complex reflectances/transmittances (r, t) at the input ports and
    (r_prime, t_prime) at the output ports."""

    r: complex
    t: complex
    r_prime: complex
    t_prime: complex

    def stokes_residuals(self) -> dict[str, float]:
        """Deviations from the three energy-conservation (Stokes) laws."""
        return {
            "input_norm": abs(abs(self.t) ** 2 + abs(self.r) ** 2 - 1.0),
            "output_norm": abs(abs(self.t_prime) ** 2 + abs(self.r_prime) ** 2 - 1.0),
            "cross": abs(self.t_prime * self.r.conjugate() + self.r_prime * self.t.conjugate()),
        }


def beam_splitter_matrix(params: BeamSplitterParams, tol: float = STOKES_TOL) -> np.ndarray:
    """Two-port scattering matrix [[t', r], [r', t]] mapping input mode
    operators to output mode operators.

    Raises ValueError naming every violated Stokes law beyond ``tol``.
    """
    residuals = params.stokes_residuals()
    bad = [f"{name} (residual {value:.3e})" for name, value in residuals.items() if value > tol]
    if bad:
        raise ValueError("Stokes laws violated: " + ", ".join(bad))
    return np.array(
        [[params.t_prime, params.r], [params.r_prime, params.t]], dtype=complex
    )


@dataclass(frozen=True)
class MziSettings:
    """Arm phase phi and relative beam-splitter phase gamma (radians)."""

    phi: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.phi) and math.isfinite(self.gamma)):
            raise ValueError("phi and gamma must be finite")


@dataclass(frozen=True)
class MziTwoPort:
    """Effective beam-splitter scattering of a balanced Mach-Zehnder.

    ``matrix`` is [[t_prime, r], [r_prime, t]] in the output ordering that
    makes the interferometer read as a single tunable beam splitter;
    r == r_prime for identical 50:50 splitters.
    """

    matrix: np.ndarray
    r: complex
    t: complex
    t_prime: complex

    @property
    def r_prime(self) -> complex:
        return self.r


def mzi_two_port(settings: MziSettings) -> MziTwoPort:
    """Scattering of two opposed 50:50 splitters with arm phase phi.

    R = R' = (1 + e^{i phi})/2, T = e^{i gamma} (1 - e^{i phi})/2 and
    T' = e^{-i gamma} (1 - e^{i phi})/2, so |R|^2 + |T|^2 = 1 identically.
    """
    eip = cmath.exp(1j * settings.phi)
    r = (1.0 + eip) / 2.0
    t = cmath.exp(1j * settings.gamma) * (1.0 - eip) / 2.0
    t_prime = cmath.exp(-1j * settings.gamma) * (1.0 - eip) / 2.0
    matrix = np.array([[t_prime, r], [r, t]], dtype=complex)
    return MziTwoPort(matrix=matrix, r=r, t=t, t_prime=t_prime)


def _lgfact(nmax: int) -> np.ndarray:
    """log(n!) for n = 0..nmax via the library log-Gamma."""
    return np.array([math.lgamma(n + 1.0) for n in range(nmax + 1)])


def displacement_coefficient(n: int, k: int, beta: complex) -> complex:
    """Single matrix element <k|D(beta)|n>, evaluated termwise in the
    log-Gamma domain."""
    if n < 0 or k < 0:
        raise ValueError("Fock indices must be nonnegative")
    beta = complex(beta)
    if beta == 0:
        return 1.0 + 0.0j if n == k else 0.0 + 0.0j
    ab = abs(beta)
    theta = cmath.phase(beta)
    lb = math.log(ab)
    lg = _lgfact(max(n, k))
    i = np.arange(min(n, k) + 1)
    logmag = (
        0.5 * lg[n]
        + 0.5 * lg[k]
        - lg[i]
        - np.array([math.lgamma(n - ii + 1.0) for ii in i])
        - np.array([math.lgamma(k - ii + 1.0) for ii in i])
        + (n + k - 2 * i) * lb
    )
    signs = np.where(i % 2 == 0, 1.0, -1.0)
    series = float(np.sum(signs * np.exp(logmag)))
    phase = (-1.0) ** n * cmath.exp(1j * theta * (k - n))
    return math.exp(-0.5 * ab * ab) * phase * series


def _matrix_direct(beta: complex, dim: int) -> np.ndarray:
    ab = abs(beta)
    theta = cmath.phase(beta)
    lb = math.log(ab)
    lg = _lgfact(dim)
    out = np.empty((dim, dim), dtype=complex)
    k_idx = np.arange(dim)
    for n in range(dim):
        i = np.arange(n + 1)
        # term (k, i) is valid only for i <= min(n, k)
        valid = i[None, :] <= np.minimum(n, k_idx)[:, None]
        ki = np.clip(k_idx[:, None] - i[None, :], 0, None)
        logmag = (
            0.5 * lg[n]
            + 0.5 * lg[k_idx][:, None]
            - lg[i][None, :]
            - lg[n - i][None, :]
            - lg[ki]
            + (n + k_idx[:, None] - 2 * i[None, :]) * lb
        )
        terms = np.where(valid, np.exp(logmag), 0.0)
        series = terms @ np.where(i % 2 == 0, 1.0, -1.0)
        phase = (-1.0) ** n * np.exp(1j * theta * (k_idx - n))
        out[:, n] = math.exp(-0.5 * ab * ab) * phase * series
    return out


def _triangular_factor(z: complex, dim: int, lg: np.ndarray) -> np.ndarray:
    """Matrix of exp(z a^dag)-type action: entry (i, m) = sqrt(m!) z^{m-i} /
    (sqrt(i!) (m-i)!) for i <= m, the column-n expansion used by the
    factorized construction."""
    i = np.arange(dim)[:, None]
    m = np.arange(dim)[None, :]
    lower = m - i
    mask = lower >= 0
    az = abs(z)
    if az == 0.0:
        return np.eye(dim, dtype=complex)
    logmag = 0.5 * lg[m] - 0.5 * lg[i] - lg[np.clip(lower, 0, None)] + np.clip(lower, 0, None) * math.log(az)
    phase = np.exp(1j * cmath.phase(z) * np.clip(lower, 0, None))
    return np.where(mask, np.exp(logmag) * phase, 0.0)


def _matrix_factorized(beta: complex, dim: int) -> np.ndarray:
    lg = _lgfact(dim)
    u_bra = _triangular_factor(beta.conjugate(), dim, lg)
    u_ket = _triangular_factor(-beta.conjugate(), dim, lg)
    return math.exp(-0.5 * abs(beta) ** 2) * (u_bra.conj().T @ u_ket)


def _laguerre_table(x: float, mmax: int, amax: int) -> np.ndarray:
    """L_m^{(a)}(x) for 0 <= m <= mmax, 0 <= a <= amax by upward recurrence
    in the degree m (stable for the dominant solution at these sizes)."""
    a = np.arange(amax + 1, dtype=float)
    table = np.empty((mmax + 1, amax + 1))
    table[0] = 1.0
    if mmax >= 1:
        table[1] = 1.0 + a - x
    for m in range(2, mmax + 1):
        table[m] = ((2 * m - 1 + a - x) * table[m - 1] - (m - 1 + a) * table[m - 2]) / m
    return table


def _matrix_laguerre(beta: complex, dim: int) -> np.ndarray:
    ab = abs(beta)
    theta = cmath.phase(beta)
    x = ab * ab
    lg = _lgfact(dim)
    lag = _laguerre_table(x, dim - 1, dim - 1)
    k = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(k, n)
    a = np.abs(k - n)
    logmag = 0.5 * (lg[lo] - lg[lo + a]) + a * math.log(ab) - 0.5 * x
    body = lag[lo, a] * np.exp(logmag)
    phase = np.where(k >= n, np.exp(1j * theta * (k - n)), ((-1.0) ** (n - k)) * np.exp(-1j * theta * (n - k)))
    return body * phase


_DISPLACEMENT_METHODS = {
    "direct": _matrix_direct,
    "factorized": _matrix_factorized,
    "laguerre": _matrix_laguerre,
}


def displacement_matrix(beta: complex, space: FockSpace, method: str = "laguerre") -> LinearOperator:
    """Displacement operator on the truncated space; entry (k, n) = C[n, k].

    Emits a TruncationWarning when the coherent mode index |beta|^2 reaches
    half the truncation, where even interior columns start to leak.
    """
    if method not in _DISPLACEMENT_METHODS:
        raise ValueError(f"unknown method {method!r}, expected one of {sorted(_DISPLACEMENT_METHODS)}")
    beta = complex(beta)
    dim = space.dim
    if beta == 0:
        return LinearOperator(space, np.eye(dim, dtype=complex))
    if abs(beta) ** 2 >= dim / 2:
        warn_truncation(
            f"truncation dim {dim} is small for |beta|^2 = {abs(beta) ** 2:.3g}; "
            "matrix columns are inaccurate representations of the displaced states"
        )
    return LinearOperator(space, _DISPLACEMENT_METHODS[method](beta, dim))


def interior_index_bound(beta: complex, dim: int) -> int:
    """Largest Fock index of the interior block, dim - ceil(4 |beta| sqrt(dim)).

    Beyond this index truncation artifacts are permitted; a negative value
    means the interior block is empty at this truncation.
    """
    return dim - math.ceil(4.0 * abs(beta) * math.sqrt(dim))


def coherent_state(beta: complex, space: FockSpace) -> StateVector:
    """Truncated coherent state D(beta)|0>; norm approaches 1 from below as
    the truncation grows."""
    beta = complex(beta)
    dim = space.dim
    if beta == 0:
        amps = np.zeros(dim, dtype=complex)
        amps[0] = 1.0
        return StateVector(space, amps)
    ab = abs(beta)
    k = np.arange(dim)
    lg = _lgfact(dim - 1)
    logmag = -0.5 * ab * ab + k * math.log(ab) - 0.5 * lg
    amps = np.exp(logmag) * np.exp(1j * cmath.phase(beta) * k)
    return StateVector(space, amps)


def gcs_state(n: int, beta: complex, space: FockSpace, method: str = "laguerre") -> StateVector:
    """Displaced number state D(beta)|n> (generalized coherent state)."""
    if not 0 <= n < space.dim:
        raise ValueError(f"level {n} outside 0..{space.dim - 1}")
    if n == 0:
        return coherent_state(beta, space)
    return StateVector(space, displacement_matrix(beta, space, method=method).matrix[:, n])
