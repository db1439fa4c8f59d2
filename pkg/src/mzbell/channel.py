"""Mach-Zehnder displacement channel: two-mode output states, the reduced
detector state, Kraus operators, and the closed-form photon-counting POVM.

The interferometer is treated as an effective beam splitter with
transmittance T, reflectance R' (R = R' for opposed 50:50 splitters, and
T' = T under the zero relative-phase convention), fed with |psi> on the
signal port and a coherent |alpha> on the drive port.  The detector mode
carries the displaced signal; tracing the idler yields a channel whose
effects M_i give the probability of counting i photons.

Closed-form effects are assembled as M_i = X X^dagger from a log-domain
factor matrix, which makes hermiticity and positivity structural rather
than numerical accidents.  The inner alternating sums over the counting
index carry a (-1)^j factor; the unsigned variant fails the channel-oracle
cross-check and is not implemented.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fock import (
    DensityOperator,
    FockSpace,
    LinearOperator,
    StateVector,
    basis_state,
    partial_trace,
    tensor_product,
    warn_truncation,
)
from .optics import _lgfact, displacement_matrix, gcs_state, interior_index_bound

TAIL_WARN = 1e-6


@dataclass(frozen=True)
class ChannelConfig:
    """Effective scattering parameters and per-mode truncation.

    ``t`` and ``r_prime`` may be taken verbatim from figure captions even
    when |r_prime|^2 + |t|^2 != 1; ``unitarity_defect`` reports how far the
    pair is from a physical splitter.
    """

    t: complex
    r_prime: complex
    alpha: complex
    space: FockSpace
    i_max: int | None = None

    @classmethod
    def from_moduli(
        cls,
        r_prime: float,
        t: float,
        alpha_scale: float,
        space: FockSpace,
        strict_unitarity: bool = False,
        i_max: int | None = None,
    ) -> "ChannelConfig":
        """Build from the real moduli quoted in figure captions.

        With ``strict_unitarity`` the reflectance is derived as
        sqrt(1 - t^2) regardless of the quoted value.  The drive amplitude
        is alpha_scale / t, keeping t*alpha constant across a limit scan.
        """
        if t == 0:
            raise ValueError("t must be nonzero to set alpha = alpha_scale / t")
        if strict_unitarity:
            if abs(t) >= 1:
                raise ValueError(f"strict unitarity requires |t| < 1, got {abs(t)}")
            r_prime = math.sqrt(1.0 - t * t)
        return cls(t=complex(t), r_prime=complex(r_prime), alpha=complex(alpha_scale) / t,
                   space=space, i_max=i_max)

    # R = R' and T' = T for the opposed 50:50 interferometer
    @property
    def r(self) -> complex:
        return self.r_prime

    @property
    def t_prime(self) -> complex:
        return self.t

    @property
    def t_alpha(self) -> complex:
        return self.t * self.alpha

    @property
    def r_alpha(self) -> complex:
        return self.r * self.alpha

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.r_prime) ** 2 + abs(self.t) ** 2 - 1.0)

    @property
    def is_unitary(self) -> bool:
        return self.unitarity_defect <= 1e-9

    @property
    def default_i_max(self) -> int:
        """Counts above this carry < ~1e-8 of the detection probability."""
        ta = abs(self.t_alpha)
        return math.ceil(ta * ta + 6.0 * ta + 10.0)

    @property
    def effective_i_max(self) -> int:
        return self.default_i_max if self.i_max is None else self.i_max

    @property
    def interior_bound(self) -> int:
        """Largest per-mode index unaffected by displacement leakage."""
        leak = max(abs(self.r_alpha), abs(self.t_alpha))
        return interior_index_bound(leak, self.space.dim)


def two_mode_output_state(psi: StateVector, config: ChannelConfig, warn: bool = True) -> StateVector:
    """Output of the interferometer for input |psi> (x) |alpha>.

    Returns D(R alpha) (x) D(T alpha) applied to the binomially split
    signal, on the row-major product space (idler index major, detector
    index minor).  The norm deficit against the input norm measures
    truncation leakage and triggers a TruncationWarning above 1e-6.
    """
    d = config.space.dim
    if psi.space.dim != d:
        raise ValueError("input state must live on the per-mode space of the config")
    if warn and abs(config.alpha) ** 2 + 4.0 * abs(config.alpha) > d:
        warn_truncation(
            f"per-mode dim {d} cannot hold the coherent tail of |alpha| = {abs(config.alpha):.3g}"
        )
    lgf = _lgfact(d)
    c = psi.amplitudes
    k = np.arange(d)[:, None]
    m = np.arange(d)[None, :]
    n = k + m
    mask = n < d
    nc = np.clip(n, 0, d - 1)
    sqrt_binom = np.exp(0.5 * (lgf[nc] - lgf[k] - lgf[m]))
    split = np.where(mask, c[nc] * sqrt_binom, 0.0)
    split = split * np.power(config.t_prime, k) * np.power(config.r_prime, m)

    d_idler = displacement_matrix(config.r_alpha, config.space).matrix
    d_det = displacement_matrix(config.t_alpha, config.space).matrix
    out = d_idler @ split @ d_det.T

    leaked = psi.norm**2 - float(np.linalg.norm(out) ** 2)
    if warn and leaked > TAIL_WARN:
        warn_truncation(f"output state lost {leaked:.3e} of its mass to truncation")
    return StateVector(FockSpace(d * d), out.reshape(-1))


def reduced_detector_state(
    psi: StateVector, config: ChannelConfig, via: str = "partial_trace", warn: bool = True
) -> DensityOperator:
    """State of the detector mode after tracing the idler.

    ``via="partial_trace"`` projects the full two-mode output and traces;
    it needs the idler displacement R*alpha to fit the truncation.
    ``via="closed_form"`` evaluates the traced binomial sum directly and
    stays valid for arbitrarily large alpha at fixed T*alpha.
    """
    d = config.space.dim
    if psi.space.dim != d:
        raise ValueError("input state must live on the per-mode space of the config")
    if via == "partial_trace":
        out = two_mode_output_state(psi, config, warn=warn)
        return partial_trace(out.projector(), keep=1, dims=(d, d))
    if via != "closed_form":
        raise ValueError(f"unknown construction {via!r}")

    lgf = _lgfact(d)
    c = psi.amplitudes
    m = np.arange(d)
    tp = abs(config.t_prime)
    inner = np.zeros((d, d), dtype=complex)
    rp_pow = np.power(config.r_prime, m)
    for kk in range(d):
        n = m + kk
        valid = n < d
        nc = np.clip(n, 0, d - 1)
        u = np.where(valid, c[nc] * np.exp(0.5 * (lgf[nc] - lgf[m] - lgf[kk])), 0.0)
        u = u * rp_pow * tp**kk
        if not np.any(u):
            continue
        inner += np.outer(u, u.conj())
    d_det = displacement_matrix(config.t_alpha, config.space).matrix
    rho = d_det @ inner @ d_det.conj().T
    return DensityOperator(config.space, 0.5 * (rho + rho.conj().T))


def kraus_set(config: ChannelConfig) -> list[LinearOperator]:
    """Kraus operators E_k mapping the signal mode to the detector mode,
    indexed by the traced idler level k.

    Built column-by-column from the two-mode output of each basis state, so
    sum_k E_k^dagger E_k = I holds on the interior block up to truncation.
    """
    d = config.space.dim
    columns = []
    for n in range(d):
        out = two_mode_output_state(basis_state(config.space, n), config, warn=False)
        columns.append(out.amplitudes.reshape(d, d))
    w = np.stack(columns, axis=-1)  # (idler k, detector m, input n)
    return [LinearOperator(config.space, w[k]) for k in range(d)]


def apply_kraus(kraus: list[LinearOperator], rho: DensityOperator) -> DensityOperator:
    """Channel action sum_k E_k rho E_k^dagger."""
    out = np.zeros_like(rho.matrix)
    for e in kraus:
        out = out + e.matrix @ rho.matrix @ e.matrix.conj().T
    return DensityOperator(rho.space, 0.5 * (out + out.conj().T))


def kraus_completeness_defect(kraus: list[LinearOperator], bound: int | None = None) -> float:
    """Max-entry deviation of sum_k E_k^dagger E_k from the identity on the
    interior block (all indices when bound is None)."""
    d = kraus[0].space.dim
    acc = np.zeros((d, d), dtype=complex)
    for e in kraus:
        acc += e.matrix.conj().T @ e.matrix
    acc -= np.eye(d)
    if bound is not None:
        if bound < 0:
            raise ValueError("interior block is empty at this truncation")
        acc = acc[: bound + 1, : bound + 1]
    return float(np.max(np.abs(acc)))


def _signed_logsumexp(logmag: np.ndarray, signs: np.ndarray, axis: int = -1):
    """Sum of signs*exp(logmag) returned as (sign, log|sum|)."""
    mx = np.max(logmag, axis=axis, keepdims=True)
    mx_safe = np.where(np.isfinite(mx), mx, 0.0)
    s = np.sum(signs * np.exp(logmag - mx_safe), axis=axis)
    out_sign = np.sign(s)
    with np.errstate(divide="ignore"):
        out_log = np.squeeze(mx_safe, axis=axis) + np.log(np.abs(s))
    return out_sign, out_log


def _counting_kernel(i: int, log_ta: float, mmax: int, lgf: np.ndarray):
    """Signed log form of G_i(m) = i! m! sum_j (-1)^j |T alpha|^{-2j} /
    (j! (i-j)! (m-j)!), the inner alternating sum shared by both matrix
    indices of M_i.  Cached per (i, m) by evaluating all m at once."""
    m = np.arange(mmax + 1)[:, None]
    j = np.arange(min(i, mmax) + 1)[None, :]
    valid = j <= np.minimum(i, m)
    jc = np.minimum(j, np.minimum(i, m))
    logmag = (
        lgf[i]
        + lgf[m.ravel()][:, None]
        - lgf[jc]
        - lgf[i - jc]
        - lgf[np.clip(m - jc, 0, None)]
        - 2.0 * jc * log_ta
    )
    logmag = np.where(valid, logmag, -np.inf)
    signs = np.where(jc % 2 == 0, 1.0, -1.0)
    return _signed_logsumexp(logmag, signs, axis=1)


def povm_element(i: int, config: ChannelConfig) -> LinearOperator:
    """Closed-form effect M_i for counting i photons at the detector.

    Evaluates the five-index sum with every factorial ratio in the
    log-Gamma domain, folded into a factor matrix X with M_i = X X^dagger;
    positivity and hermiticity are therefore structural.
    """
    if i < 0:
        raise ValueError("photon count must be nonnegative")
    if i > config.effective_i_max:
        raise ValueError(f"count {i} exceeds configured i_max {config.effective_i_max}")
    d = config.space.dim
    ta = config.t_alpha
    if ta == 0:
        return _povm_element_undisplaced(i, config)
    if config.r_prime == 0:
        raise ValueError("r_prime = 0 is a degenerate configuration for the closed form")

    ata = abs(ta)
    log_ta = math.log(ata)
    lgf = _lgfact(max(d, i) + 1)
    zeta = -config.r_prime.conjugate() * ta
    log_zeta = math.log(abs(zeta))
    # weight ratio (|T'| / |R' T alpha|)^2 of successive idler levels
    ratio = (abs(config.t_prime) / (abs(config.r_prime) * ata)) ** 2
    log_ratio = math.log(ratio) if ratio > 0 else -np.inf

    g_sign, g_log = _counting_kernel(i, log_ta, d - 1, lgf)
    log_pref = -(ata * ata) + 2.0 * i * log_ta - lgf[i]

    n = np.arange(d)[:, None]
    kk = np.arange(d)[None, :]
    mask = kk <= n
    mc = np.minimum(kk, n)
    col = np.zeros(d)
    col[1:] = 0.5 * (np.arange(1, d) * log_ratio - lgf[1:d])
    logmag = (
        0.5 * log_pref
        + n * log_zeta
        + 0.5 * lgf[n.ravel()][:, None]
        + g_log[np.clip(n - mc, 0, None)]
        - lgf[np.clip(n - mc, 0, None)]
        + col[None, :]
    )
    factor = np.where(mask, g_sign[np.clip(n - mc, 0, None)] * np.exp(logmag), 0.0)
    factor = factor * np.exp(-1j * math.atan2(zeta.imag, zeta.real) * n)
    # entry (n', n) = sum_k conj(X[n',k]) X[n,k], a Gram form, so the result
    # is Hermitian and positive semidefinite by construction
    mat = factor.conj() @ factor.T
    return LinearOperator(config.space, 0.5 * (mat + mat.conj().T))


def _povm_element_undisplaced(i: int, config: ChannelConfig) -> LinearOperator:
    """T*alpha = 0 edge: the detector sees the bare binomial split, so the
    effect is diagonal with entries C(n, i) |T'|^{2(n-i)} |R'|^{2i}."""
    d = config.space.dim
    lgf = _lgfact(d)
    diag = np.zeros(d, dtype=complex)
    tp, rp = abs(config.t_prime), abs(config.r_prime)
    for nn in range(i, d):
        log_binom = lgf[nn] - lgf[i] - lgf[nn - i]
        diag[nn] = math.exp(log_binom) * rp ** (2 * i) * tp ** (2 * (nn - i))
    return LinearOperator(config.space, np.diag(diag))


@dataclass(frozen=True)
class PovmSet:
    """Ordered effects M_0..M_imax built at a common configuration."""

    config: ChannelConfig
    effects: tuple[LinearOperator, ...]

    @property
    def i_max(self) -> int:
        return len(self.effects) - 1

    def hermiticity_defect(self) -> float:
        return max(e.hermiticity_defect() for e in self.effects)

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh(e.matrix)[0]) for e in self.effects)

    def completeness_defect(self, bound: int | None = None) -> float:
        """Max deviation of sum_i M_i from the identity on the interior
        block; the deficit equals the counting-tail mass above i_max."""
        d = self.config.space.dim
        acc = np.zeros((d, d), dtype=complex)
        for e in self.effects:
            acc += e.matrix
        acc -= np.eye(d)
        if bound is not None:
            if bound < 0:
                raise ValueError("interior block is empty at this truncation")
            acc = acc[: bound + 1, : bound + 1]
        return float(np.max(np.abs(acc)))


def build_povm(config: ChannelConfig, i_max: int | None = None) -> PovmSet:
    top = config.effective_i_max if i_max is None else i_max
    cfg = config if i_max is None else ChannelConfig(
        t=config.t, r_prime=config.r_prime, alpha=config.alpha, space=config.space, i_max=i_max
    )
    return PovmSet(cfg, tuple(povm_element(i, cfg) for i in range(top + 1)))


def gram_matrix(povm: PovmSet) -> np.ndarray:
    """|Tr(M_j^dagger M_i)| for all effect pairs (symmetric, nonnegative)."""
    stack = np.stack([e.matrix for e in povm.effects])
    flat = stack.reshape(len(povm.effects), -1)
    return np.abs(flat.conj() @ flat.T)


def gcs_projector(i: int, config: ChannelConfig) -> LinearOperator:
    """Projector onto |i, -T alpha>, the projective limit of M_i."""
    v = gcs_state(i, -config.t_alpha, config.space).amplitudes
    return LinearOperator(config.space, np.outer(v, v.conj()))


def _entropy_bits(eigs: np.ndarray) -> float:
    p = np.clip(np.real(eigs), 0.0, None)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def output_entanglement_entropy(psi: StateVector, config: ChannelConfig, warn: bool = True) -> float:
    """Von Neumann entropy (bits) of either reduction of the normalized
    two-mode output; zero iff the output is a product state."""
    d = config.space.dim
    out = two_mode_output_state(psi, config, warn=warn).normalized()
    rho = partial_trace(out.projector(), keep=1, dims=(d, d))
    return _entropy_bits(np.linalg.eigvalsh(rho.matrix))
