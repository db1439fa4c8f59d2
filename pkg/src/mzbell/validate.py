"""Machine-checkable invariant suites behind the ``validate`` subcommand.

Every check is a named record with the measured value, its threshold, and
whether it is a hard assertion or an informational observation.  The
conjecture scan and the scanned-versus-analytic overlap comparison are
informational by design: an off-edge maximum or a scanned overlap above
the (2 pi x)^{-1/4} line is logged with its coordinates, not treated as a
build failure.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from . import channel, chsh, optics, uncertainty
from .fock import (
    DensityOperator,
    FockSpace,
    StateVector,
    basis_state,
    hermitian_eigensystem,
    hs_inner,
    partial_trace,
    tensor_product,
)


def _check(value: float, threshold: float, op: str = "<=", kind: str = "assert") -> dict:
    ok = value <= threshold if op == "<=" else value >= threshold
    return {"value": float(value), "threshold": float(threshold), "op": op,
            "pass": bool(ok), "kind": kind}


def _info(value, note: str = "") -> dict:
    entry = {"value": value, "kind": "info", "pass": True}
    if note:
        entry["note"] = note
    return entry


def _random_density(rng: np.random.Generator, dim: int) -> DensityOperator:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = z @ z.conj().T
    return DensityOperator(FockSpace(dim), m / np.trace(m))


def suite_fock(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}

    rho_a, rho_b = _random_density(rng, 4), _random_density(rng, 5)
    prod = tensor_product(rho_a, rho_b)
    back_a = partial_trace(prod, 0, (4, 5))
    back_b = partial_trace(prod, 1, (4, 5))
    round_trip = max(
        float(np.max(np.abs(back_a.matrix - rho_a.matrix))),
        float(np.max(np.abs(back_b.matrix - rho_b.matrix))),
    )
    checks["tensor_ptrace_round_trip"] = _check(round_trip, 1e-12)

    z = rng.standard_normal((24, 24)) + 1j * rng.standard_normal((24, 24))
    herm = z + z.conj().T
    vals, vecs = hermitian_eigensystem(herm)
    recon = vecs @ np.diag(vals) @ vecs.conj().T
    rel = np.linalg.norm(recon - herm) / np.linalg.norm(herm)
    checks["eigen_reconstruction"] = _check(float(rel), 1e-9)
    ortho = np.max(np.abs(vecs.conj().T @ vecs - np.eye(24)))
    checks["eigenvector_orthonormality"] = _check(float(ortho), 1e-10)
    residual = max(
        np.linalg.norm(herm @ vecs[:, j] - vals[j] * vecs[:, j]) for j in range(24)
    ) / np.linalg.norm(herm)
    checks["eigenpair_residual"] = _check(float(residual), 1e-9)

    m = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    diff = abs(hs_inner(m, m).real - np.linalg.norm(m) ** 2) / np.linalg.norm(m) ** 2
    checks["hs_inner_frobenius"] = _check(float(diff), 1e-12)

    z = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    psi = StateVector(FockSpace(20), z / np.linalg.norm(z))
    rho = psi.projector()
    eig_a = np.linalg.eigvalsh(partial_trace(rho, 0, (4, 5)).matrix)
    eig_b = np.linalg.eigvalsh(partial_trace(rho, 1, (4, 5)).matrix)
    schmidt = float(np.max(np.abs(np.sort(eig_a)[::-1][:4] - np.sort(eig_b)[::-1][:4])))
    checks["schmidt_spectrum_symmetry"] = _check(schmidt, 1e-12)
    return checks


def _random_stokes_params(rng: np.random.Generator) -> optics.BeamSplitterParams:
    theta = rng.uniform(0.0, math.pi / 2.0)
    ph_t, ph_r, ph_tp = rng.uniform(0.0, 2.0 * math.pi, 3)
    t = math.cos(theta) * np.exp(1j * ph_t)
    r = math.sin(theta) * np.exp(1j * ph_r)
    t_prime = math.cos(theta) * np.exp(1j * ph_tp)
    # cross law fixes the last phase up to the pi offset
    ph_rp = ph_tp - ph_r + ph_t + math.pi
    r_prime = math.sin(theta) * np.exp(1j * ph_rp)
    return optics.BeamSplitterParams(r=r, t=t, r_prime=r_prime, t_prime=t_prime)


def suite_optics(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}

    worst = 0.0
    for _ in range(50):
        u = optics.beam_splitter_matrix(_random_stokes_params(rng))
        worst = max(worst, float(np.max(np.abs(u.conj().T @ u - np.eye(2)))))
    checks["beam_splitter_unitarity"] = _check(worst, 1e-12)

    phis = rng.uniform(-2.0 * math.pi, 2.0 * math.pi, 1000)
    gammas = rng.uniform(-2.0 * math.pi, 2.0 * math.pi, 1000)
    worst = max(
        abs(abs(tp.r) ** 2 + abs(tp.t) ** 2 - 1.0)
        for tp in (optics.mzi_two_port(optics.MziSettings(p, g)) for p, g in zip(phis, gammas))
    )
    checks["mzi_energy_conservation"] = _check(float(worst), 1e-15)

    dim = 64
    sp = FockSpace(dim)
    agree, empty = 0.0, []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for ab in (0.3, 1.0, 2.0, 3.8):
            for phase in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False):
                beta = ab * np.exp(1j * phase)
                bound = optics.interior_index_bound(beta, dim)
                if bound < 0:
                    empty.append(ab)
                    break
                mats = [optics.displacement_matrix(beta, sp, m).matrix[: bound + 1, : bound + 1]
                        for m in ("direct", "factorized", "laguerre")]
                agree = max(agree, float(np.max(np.abs(mats[0] - mats[2]))),
                            float(np.max(np.abs(mats[1] - mats[2]))))
    checks["method_equivalence_interior"] = _check(agree, 1e-10)
    if empty:
        checks["method_equivalence_empty_interior"] = _info(
            sorted(set(empty)), "interior block empty at dim 64; entries are truncation-free, checked at smaller |beta|"
        )

    worst_unit, worst_comp = 0.0, 0.0
    for ab in (0.5, 1.0, 2.0):
        beta = ab * np.exp(0.31j)
        bound = optics.interior_index_bound(beta, 64)
        d = optics.displacement_matrix(beta, FockSpace(128)).matrix
        resid = d.conj().T @ d - np.eye(128)
        worst_unit = max(worst_unit, float(np.max(np.abs(resid[: bound + 1, : bound + 1]))))
        comp = d @ optics.displacement_matrix(-beta, FockSpace(128)).matrix - np.eye(128)
        worst_comp = max(worst_comp, float(np.max(np.abs(comp[: bound + 1, : bound + 1]))))
    checks["truncated_unitarity_interior"] = _check(worst_unit, 1e-8)
    checks["displacement_composition_interior"] = _check(worst_comp, 1e-8)

    worst = 0.0
    beta = math.sqrt(2.0)
    profile = uncertainty.coherent_overlap_profile(beta, 60)
    for k in range(1, 61):
        recur = beta / math.sqrt(k) * profile[k - 1]
        worst = max(worst, abs(profile[k] - recur) / profile[k])
    checks["coherent_recurrence"] = _check(worst, 1e-12)

    worst_gap, index_ok = 0.0, True
    for x in (0.5, 1.0, 2.0, 4.0, 9.0, 14.44):
        profile = uncertainty.coherent_overlap_profile(math.sqrt(x), 80)
        # nearest integers of x; integer x ties with the level below
        allowed = {math.floor(x), math.ceil(x)}
        if abs(x - round(x)) < 1e-12:
            allowed.add(int(round(x)) - 1)
        index_ok = index_ok and int(np.argmax(profile)) in allowed
        attained = max(profile[c] for c in allowed if 0 <= c < len(profile))
        worst_gap = max(worst_gap, 1.0 - float(attained / profile.max()))
    checks["edge_argmax_at_rounded_mode"] = _check(worst_gap, 1e-12)
    checks["edge_argmax_index_nearest"] = {
        "value": index_ok, "pass": bool(index_ok), "kind": "assert",
        "threshold": None, "op": "argmax in nearest-integer set",
    }
    return checks


def suite_povm(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}
    sp = FockSpace(20)

    states = [basis_state(sp, 0), basis_state(sp, 1)]
    amps = np.zeros(20, dtype=complex)
    amps[0] = amps[2] = 1.0 / math.sqrt(2.0)
    states.append(StateVector(sp, amps))
    for _ in range(2):
        states.append(uncertainty.haar_random_state(8, rng))
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for r_prime in (0.9, 0.99, 0.999):
            t = math.sqrt(1.0 - r_prime * r_prime)
            cfg = channel.ChannelConfig.from_moduli(r_prime, t, 0.1, sp, i_max=12)
            effects = [channel.povm_element(i, cfg) for i in range(13)]
            for psi in states:
                padded = np.zeros(20, dtype=complex)
                padded[: psi.space.dim] = psi.amplitudes
                full = StateVector(sp, padded)
                rho5 = channel.reduced_detector_state(full, cfg)
                for i, eff in enumerate(effects):
                    lhs = float(np.real(np.vdot(full.amplitudes, eff.matrix @ full.amplitudes)))
                    worst = max(worst, abs(lhs - float(np.real(rho5.matrix[i, i]))))
    checks["povm_channel_oracle"] = _check(worst, 1e-6)

    cfg = channel.ChannelConfig.from_moduli(0.954, 5e-3, 0.1, FockSpace(30), i_max=14)
    povm = channel.build_povm(cfg)
    checks["povm_hermiticity"] = _check(povm.hermiticity_defect(), 1e-10)
    checks["povm_positivity"] = _check(-povm.min_eigenvalue(), 1e-8)

    dists = []
    sp50 = FockSpace(50)
    for r_prime, t in ((0.866, 0.5), (0.954, 5e-3), (0.987, 5e-5), (0.999987, 5e-7)):
        cfg = channel.ChannelConfig.from_moduli(r_prime, t, 0.1, sp50, i_max=50)
        m0 = channel.povm_element(0, cfg)
        dists.append(float(np.linalg.norm(m0.matrix - channel.gcs_projector(0, cfg).matrix)))
    monotone = all(a > b for a, b in zip(dists, dists[1:]))
    checks["projective_limit_monotone"] = {
        "value": dists, "pass": bool(monotone), "kind": "assert", "op": "strictly decreasing",
        "threshold": None,
    }
    checks["projective_limit_final_distance"] = _check(dists[-1], 1e-3)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sp48 = FockSpace(48)
        cfg = channel.ChannelConfig.from_moduli(0.0, 0.1, 0.1, sp48, strict_unitarity=True)
        kraus = channel.kraus_set(cfg)
        checks["kraus_completeness_interior"] = _check(
            channel.kraus_completeness_defect(kraus, cfg.interior_bound), 1e-8
        )
        psi = uncertainty.haar_random_state(6, rng)
        padded = np.zeros(48, dtype=complex)
        padded[:6] = psi.amplitudes
        full = StateVector(sp48, padded)
        via_kraus = channel.apply_kraus(kraus, full.projector())
        via_trace = channel.reduced_detector_state(full, cfg)
        checks["kraus_vs_partial_trace"] = _check(
            float(np.linalg.norm(via_kraus.matrix - via_trace.matrix)), 1e-8
        )
    return checks


def suite_mu(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}

    separations = (0.5, math.log(2.0), 2.0, 4.0)
    space = FockSpace(128)
    min_slack = math.inf
    for dsq in separations:
        beta2 = math.sqrt(dsq)
        for _ in range(200):
            psi = uncertainty.haar_random_state(24, rng)
            rep = uncertainty.verify_mu(psi, 0.0, beta2, space)
            min_slack = min(min_slack, rep.slack)
    checks["mu_min_slack"] = _check(-min_slack, 1e-9)
    checks["mu_states_per_separation"] = _info(200, f"seed {seed}, separations {separations}")

    grid = [1.0, 2.0, 2.25, 4.0, 9.0, 14.44, 16.0]
    margin_ok = True
    scanned_violations = []
    for x in grid:
        analytic = uncertainty.edge_overlap_formula(x)
        simple = uncertainty.simplified_overlap_bound(x)
        stirling = uncertainty.stirling_overlap_bound(x)
        if not (analytic < stirling and abs(stirling - simple) <= 1e-12 * simple):
            margin_ok = False
        c, _ = uncertainty.overlap_bound_c(math.sqrt(x), 0.0, n_max=80, k_max=80)
        if c >= simple:
            scanned_violations.append({"separation_sq": x, "scanned_c": c, "bound": simple})
    checks["analytic_overlap_chain"] = {
        "value": margin_ok, "pass": bool(margin_ok), "kind": "assert",
        "threshold": None, "op": "gamma-form < stirling == simplified",
    }
    checks["scanned_overlap_vs_simplified_bound"] = _info(
        scanned_violations,
        "integer-level maxima exceeding (2 pi x)^{-1/4}; known gap of the printed chain "
        "between integer values of x",
    )

    records = uncertainty.conjecture_scan()
    off_edge = [r for r in records if not r.on_edge]
    checks["edge_conjecture_scan"] = _info(
        {"records": len(records), "off_edge": [(r.delta_abs, r.phase, r.n, r.k) for r in off_edge]},
        "informational: off-edge hits are logged conjecture violations, not failures",
    )
    return checks


def suite_chsh(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}

    lam = chsh.lambda_max(0.5, 0.5)
    checks["tsirelson_saturation"] = _check(abs(lam - chsh.TSIRELSON), 1e-10)

    worst = 0.0
    for _ in range(500):
        e1, e2 = rng.uniform(1e-6, 1.0 - 1e-6, 2)
        worst = max(worst, abs(chsh.lambda_max(e1, e2) - chsh.lambda_corrected(e1, e2)))
    checks["corrected_form_matches_eigensolver"] = _check(worst, 1e-10)
    checks["paper_form_at_optimum"] = _info(
        {"paper_form": chsh.lambda_paper_form(0.5, 0.5), "eigensolver": lam,
         "two_sqrt_three": 2.0 * math.sqrt(3.0)},
        "fourth-root form evaluates to 2 sqrt(3) at E = 1/2, inconsistent with the eigensolver",
    )

    values, grid = chsh.lambda_max_grid(49)
    checks["tsirelson_ceiling"] = _check(float(grid.max() - chsh.TSIRELSON), 1e-12)
    checks["violation_region"] = _check(2.0 - float(grid.min()), 0.0, op="<=")

    sp = FockSpace(28)
    sep = math.sqrt(math.log(2.0))
    lams = []
    for _ in range(10):
        b1 = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        b3 = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        cfg = chsh.ChshConfig(
            b1, b1 + sep * np.exp(1j * rng.uniform(0, 2 * math.pi)),
            b3, b3 + sep * np.exp(1j * rng.uniform(0, 2 * math.pi)),
        )
        lams.append(chsh.lambda_max_fock(cfg, sp))
    checks["fock_basis_invariance"] = _check(max(lams) - min(lams), 1e-9)

    psi = chsh.maximal_state()
    s = chsh.chsh_operator(0.5, 0.5)
    checks["maximal_state_eigen_residual"] = _check(
        float(np.linalg.norm(s @ psi - chsh.TSIRELSON * psi)), 1e-10
    )
    rho = DensityOperator(FockSpace(9), np.outer(psi, psi.conj()))
    spec_err = 0.0
    for keep in (0, 1):
        eig = np.sort(np.linalg.eigvalsh(partial_trace(rho, keep, (3, 3)).matrix))
        spec_err = max(spec_err, float(np.max(np.abs(eig - np.array([0.0, 0.5, 0.5])))))
    checks["maximal_state_reduction_spectrum"] = _check(spec_err, 1e-12)

    cfg = chsh.ChshConfig.optimal_real()
    sp32 = FockSpace(32)
    psi_f = chsh.coherent_state_form(cfg, sp32)
    s_f = chsh.chsh_fock_operator(cfg, sp32)
    checks["fock_embedding_expectation"] = _check(
        abs(chsh.fock_expectation(psi_f, s_f) - chsh.TSIRELSON), 1e-6
    )

    d = math.sqrt(math.log(2.0))
    general = chsh.ChshConfig(0.3 + 0.2j, 0.3 + 0.2j + d * np.exp(0.9j),
                              -0.1 + 0.05j, -0.1 + 0.05j + d * np.exp(-0.4j))
    psi_g = chsh.coherent_state_form(general, sp32)
    s_g = chsh.chsh_fock_operator(general, sp32)
    checks["general_phase_typeset_form"] = _info(
        {"norm_error": psi_g.norm_error,
         "expectation_deficit": chsh.TSIRELSON - chsh.fock_expectation(psi_g, s_g)},
        "printed general-phase combination is unit norm but not the top eigenvector off phi = 0",
    )
    emb = chsh.embedded_maximal_state(general, sp32)
    checks["general_phase_embedded_state"] = _check(
        abs(chsh.fock_expectation(emb, s_g) - chsh.TSIRELSON), 1e-9
    )
    return checks


SUITES = {
    "fock": suite_fock,
    "optics": suite_optics,
    "povm": suite_povm,
    "mu": suite_mu,
    "chsh": suite_chsh,
}


def run_suites(names, seed: int) -> dict:
    report = {}
    for name in names:
        report[name] = SUITES[name](seed)
    return report


def failed_checks(report: dict) -> list[str]:
    bad = []
    for suite_name, checks in report.items():
        for check_name, entry in checks.items():
            if entry.get("kind") == "assert" and not entry.get("pass", False):
                bad.append(f"{suite_name}.{check_name}")
    return bad
