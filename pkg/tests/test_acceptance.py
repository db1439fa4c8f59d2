"""Acceptance suite: one test per exit criterion, each at its stated
tolerance, printing one pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines inline.
"""

import math
import time
import warnings

import numpy as np
import pytest

from mzbell import channel, chsh, uncertainty
from mzbell.fock import (
    DensityOperator,
    FockSpace,
    StateVector,
    TruncationWarning,
    basis_state,
    partial_trace,
)
from mzbell.optics import displacement_matrix, interior_index_bound

LN2 = math.log(2.0)
TSIRELSON = 2.0 * math.sqrt(2.0)


def report(criterion, name, ok, detail):
    print(f"[ACCEPTANCE] C{criterion:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion} ({name}): {detail}"


def test_c01_tsirelson_saturation():
    start = time.perf_counter()
    lam = chsh.lambda_max(0.5, 0.5)
    opt = chsh.optimal_settings(grid_n=99)
    elapsed = time.perf_counter() - start
    residual = abs(lam - TSIRELSON)
    ok = residual < 1e-10 and opt.e1 == 0.5 and opt.e2 == 0.5 and elapsed < 1.0
    report(1, "tsirelson saturation", ok,
           f"residual={residual:.3e}, argmax=({opt.e1}, {opt.e2}), time={elapsed:.3f}s")


def test_c02_maximal_state_certification():
    psi = chsh.maximal_state()
    s = chsh.chsh_operator(0.5, 0.5)
    residual = float(np.linalg.norm(s @ psi - TSIRELSON * psi))
    rho = DensityOperator(FockSpace(9), np.outer(psi, psi.conj()))
    spectrum_err = 0.0
    for keep in (0, 1):
        eig = np.sort(np.linalg.eigvalsh(partial_trace(rho, keep, (3, 3)).matrix))
        spectrum_err = max(spectrum_err, float(np.max(np.abs(eig - [0.0, 0.5, 0.5]))))
    ok = residual < 1e-10 and spectrum_err < 1e-12
    report(2, "maximal-state certification", ok,
           f"eigen residual={residual:.3e}, reduction spectrum err={spectrum_err:.3e}")


def test_c03_formula_adjudication():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(500):
        e1, e2 = rng.uniform(1e-6, 1.0 - 1e-6, 2)
        worst = max(worst, abs(chsh.lambda_max(e1, e2) - chsh.lambda_corrected(e1, e2)))
    paper_value = chsh.lambda_paper_form(0.5, 0.5)
    eig_value = chsh.lambda_max(0.5, 0.5)
    inconsistent = abs(paper_value - eig_value) > 0.5
    ok = worst < 1e-10 and inconsistent
    report(3, "closed-form adjudication", ok,
           f"max |eig - corrected| = {worst:.3e} over 500 draws; "
           f"fourth-root form at E=1/2 gives {paper_value:.10f} (= 2 sqrt 3) "
           f"vs eigensolver {eig_value:.10f} (= 2 sqrt 2): inconsistent")


def test_c04_fock_embedding_cross_check():
    start = time.perf_counter()
    cfg = chsh.ChshConfig.optimal_real()
    space = FockSpace(32)
    psi = chsh.coherent_state_form(cfg, space)
    s = chsh.chsh_fock_operator(cfg, space)
    value = chsh.fock_expectation(psi, s)
    elapsed = time.perf_counter() - start
    err = abs(value - TSIRELSON)
    ok = err < 1e-6 and elapsed < 5.0
    report(4, "fock-embedding cross-check", ok,
           f"<S> = {value:.9f}, |err| = {err:.3e}, dim 32, time={elapsed:.2f}s")


def test_c05_povm_oracle_equivalence():
    start = time.perf_counter()
    space = FockSpace(20)
    cfg = channel.ChannelConfig.from_moduli(
        r_prime=0.0, t=0.05, alpha_scale=0.1, space=space,
        strict_unitarity=True, i_max=12,
    )
    amps = np.zeros(20, dtype=complex)
    amps[0] = amps[2] = 1.0 / math.sqrt(2.0)
    states = [basis_state(space, 0), basis_state(space, 1), StateVector(space, amps)]
    worst = 0.0
    for psi in states:
        rho5 = channel.reduced_detector_state(psi, cfg)
        for i in range(13):
            effect = channel.povm_element(i, cfg)
            lhs = float(np.real(np.vdot(psi.amplitudes, effect.matrix @ psi.amplitudes)))
            worst = max(worst, abs(lhs - float(np.real(rho5.matrix[i, i]))))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-6 and elapsed < 30.0
    report(5, "povm oracle equivalence", ok,
           f"max |Tr(M_i rho) - <i|rho5|i>| = {worst:.3e}, i<=12, dim 20, "
           f"time={elapsed:.2f}s")


def test_c06_projective_limit():
    sequence = ((0.866, 0.5), (0.954, 5e-3), (0.987, 5e-5), (0.999987, 5e-7))
    dists = []
    for r_prime, t in sequence:
        cfg = channel.ChannelConfig.from_moduli(r_prime, t, 0.1, FockSpace(50), i_max=50)
        dists.append(float(np.linalg.norm(channel.povm_element(0, cfg).matrix
                                          - channel.gcs_projector(0, cfg).matrix)))
    monotone = all(a > b for a, b in zip(dists, dists[1:]))

    cfg = channel.ChannelConfig.from_moduli(0.999987, 5e-7, 0.1, FockSpace(52), i_max=40)
    gram = channel.gram_matrix(channel.build_povm(cfg))
    scale = np.sqrt(np.outer(np.diag(gram), np.diag(gram)))
    ratio = gram / scale
    np.fill_diagonal(ratio, 0.0)
    off_diag = float(ratio.max())
    ok = monotone and off_diag < 1e-2
    report(6, "projective limit", ok,
           f"HS distances {['%.3e' % d for d in dists]} strictly decreasing={monotone}; "
           f"gram off/diag ratio={off_diag:.3e} at dim 52, i,j<=40")


def test_c07_gcs_kernel():
    start = time.perf_counter()
    failures = []

    beta = math.sqrt(2.0)
    profile = uncertainty.coherent_overlap_profile(beta, 60)
    recur = max(abs(profile[k] - beta / math.sqrt(k) * profile[k - 1]) / profile[k]
                for k in range(1, 61))
    if recur >= 1e-12:
        failures.append(f"recurrence {recur:.2e}")

    for x in (0.5, 1.0, 2.0, 4.0, 9.0, 14.44):
        prof = uncertainty.coherent_overlap_profile(math.sqrt(x), 80)
        rounded = int(round(x))
        if prof[rounded] < prof.max() * (1.0 - 1e-12):
            failures.append(f"argmax at x={x}")

    scanned_notes = []
    for x in (1.0, 4.0, 14.44):
        analytic = uncertainty.edge_overlap_formula(x)
        quartic = uncertainty.simplified_overlap_bound(x)
        if not analytic < quartic:
            failures.append(f"analytic chain at x={x}")
        c, _ = uncertainty.overlap_bound_c(math.sqrt(x), 0.0)
        if c > quartic:
            scanned_notes.append(f"x={x}: scanned c={c:.6f} > bound={quartic:.6f}")

    method_worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        for ab in (0.3, 1.0, 2.0, 3.8):
            bound = interior_index_bound(ab, 64)
            if bound < 0:
                continue
            for phase in np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False):
                b = ab * np.exp(1j * phase)
                mats = [displacement_matrix(b, FockSpace(bound + 1), m).matrix
                        for m in ("direct", "factorized", "laguerre")]
                method_worst = max(method_worst,
                                   float(np.max(np.abs(mats[0] - mats[2]))),
                                   float(np.max(np.abs(mats[1] - mats[2]))))
    if method_worst >= 1e-10:
        failures.append(f"method agreement {method_worst:.2e}")

    elapsed = time.perf_counter() - start
    if elapsed >= 10.0:
        failures.append(f"runtime {elapsed:.1f}s")
    note = ("; integer-level scan exceeds the quartic bound between integer "
            "separations: " + "; ".join(scanned_notes)) if scanned_notes else ""
    report(7, "gcs kernel", not failures,
           f"recurrence={recur:.2e}, method agreement={method_worst:.2e}, "
           f"time={elapsed:.2f}s{note}"
           + (f"; failures: {failures}" if failures else ""))


def test_c08_conjecture_scan():
    records = uncertainty.conjecture_scan(n_phases=8, window=80)
    off_edge = [(r.delta_abs, r.phase, r.n, r.k) for r in records if not r.on_edge]
    for hit in off_edge:
        print(f"[ACCEPTANCE] C08 conjecture counterexample logged: "
              f"|db|={hit[0]}, phase={hit[1]:.3f}, argmax=({hit[2]}, {hit[3]})")
    report(8, "edge-maximum conjecture scan", True,
           f"{len(records)} scans, {len(off_edge)} off-edge hits "
           "(counterexamples are informational)")
    assert not off_edge, "unexpected off-edge maximum; inspect the logged coordinates"


def test_c09_maassen_uffink():
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    space = FockSpace(128)
    min_slack = math.inf
    for dsq in (0.5, LN2, 2.0, 4.0):
        beta2 = math.sqrt(dsq)
        for _ in range(200):
            psi = uncertainty.haar_random_state(24, rng)
            rep = uncertainty.verify_mu(psi, 0.0, beta2, space)
            min_slack = min(min_slack, rep.slack)
    elapsed = time.perf_counter() - start
    ok = min_slack >= -1e-9 and elapsed < 20.0
    report(9, "entropic bound slack", ok,
           f"min slack = {min_slack:.6f} bits over 200 states x 4 separations "
           f"(seed 7), time={elapsed:.1f}s")


def test_c10_channel_sanity():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        space = FockSpace(48)
        cfg = channel.ChannelConfig.from_moduli(0.0, 0.1, 0.1, space,
                                                strict_unitarity=True)
        kraus = channel.kraus_set(cfg)
        defect = channel.kraus_completeness_defect(kraus, cfg.interior_bound)

        entropies = []
        sp40 = FockSpace(40)
        for alpha in (0.5, 1.0, 2.0, 4.0):
            c = channel.ChannelConfig.from_moduli(0.0, 0.1 / alpha, 0.1, sp40,
                                                  strict_unitarity=True)
            entropies.append(channel.output_entanglement_entropy(basis_state(sp40, 1), c))
    decreasing = all(a > b for a, b in zip(entropies, entropies[1:]))
    ok = defect < 1e-8 and decreasing
    report(10, "channel sanity", ok,
           f"kraus completeness defect={defect:.3e} on interior block; "
           f"entropies={['%.3e' % e for e in entropies]} strictly decreasing={decreasing}")
