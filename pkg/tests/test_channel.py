import math
import warnings

import numpy as np
import pytest

from mzbell.channel import (
    ChannelConfig,
    apply_kraus,
    build_povm,
    gcs_projector,
    gram_matrix,
    kraus_completeness_defect,
    kraus_set,
    output_entanglement_entropy,
    povm_element,
    reduced_detector_state,
    two_mode_output_state,
)
from mzbell.fock import FockSpace, StateVector, TruncationWarning, basis_state, tensor_product
from mzbell.optics import coherent_state

FIGURE_SEQUENCE = ((0.866, 0.5), (0.954, 5e-3), (0.987, 5e-5), (0.999987, 5e-7))


def silent(func, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return func(*args, **kwargs)


def superposition(space, weights):
    amps = np.zeros(space.dim, dtype=complex)
    for level, w in weights.items():
        amps[level] = w
    return StateVector(space, amps / np.linalg.norm(amps))


@pytest.fixture(scope="module")
def oracle_config():
    # T alpha = 0.1 with |alpha| = 2 and a unitarity-consistent reflectance
    return ChannelConfig.from_moduli(
        r_prime=0.0, t=0.05, alpha_scale=0.1, space=FockSpace(20),
        strict_unitarity=True, i_max=12,
    )


class TestConfig:
    def test_strict_unitarity_derives_reflectance(self, oracle_config):
        assert oracle_config.unitarity_defect < 1e-15
        assert oracle_config.alpha == pytest.approx(2.0)

    def test_figure_captions_are_not_unitary(self):
        cfg = ChannelConfig.from_moduli(0.954, 5e-3, 0.1, FockSpace(8))
        assert not cfg.is_unitary
        assert cfg.unitarity_defect == pytest.approx(1.0 - 0.954**2 - 25e-6, abs=1e-12)

    def test_strict_mode_rejects_full_transmission(self):
        with pytest.raises(ValueError, match="strict"):
            ChannelConfig.from_moduli(0.0, 1.0, 0.1, FockSpace(8), strict_unitarity=True)

    def test_default_count_ceiling(self, oracle_config):
        assert oracle_config.default_i_max == math.ceil(0.01 + 0.6 + 10.0)


class TestOutputState:
    def test_vacuum_gives_product_of_coherent_states(self):
        sp = FockSpace(20)
        cfg = ChannelConfig.from_moduli(0.0, 0.3, 0.3, sp, strict_unitarity=True)
        out = two_mode_output_state(basis_state(sp, 0), cfg)
        want = tensor_product(coherent_state(cfg.r_alpha, sp), coherent_state(cfg.t_alpha, sp))
        np.testing.assert_allclose(out.amplitudes, want.amplitudes, atol=1e-14)

    def test_high_reflectance_factorizes_onto_displaced_input(self):
        sp = FockSpace(24)
        psi = superposition(sp, {0: 1.0, 2: 1.0})
        fidelities = []
        for t in (0.3, 0.1, 0.03):
            cfg = ChannelConfig.from_moduli(0.0, t, 0.1, sp, strict_unitarity=True)
            rho5 = silent(reduced_detector_state, psi, cfg)
            from mzbell.optics import displacement_matrix

            target = displacement_matrix(cfg.t_alpha, sp).matrix @ psi.amplitudes
            fidelities.append(float(np.real(np.vdot(target, rho5.matrix @ target))))
        assert fidelities[-1] > fidelities[0]
        assert fidelities[-1] > 0.998

    def test_tail_warning_when_drive_does_not_fit(self):
        sp = FockSpace(8)
        cfg = ChannelConfig.from_moduli(0.0, 0.5, 1.5, sp, strict_unitarity=True)
        with pytest.warns(TruncationWarning):
            two_mode_output_state(basis_state(sp, 0), cfg)

    def test_dim_mismatch(self, oracle_config):
        with pytest.raises(ValueError):
            two_mode_output_state(basis_state(FockSpace(10), 0), oracle_config)


class TestReducedState:
    def test_vacuum_reduces_to_coherent_projector(self):
        sp = FockSpace(24)
        cfg = ChannelConfig.from_moduli(0.0, 0.2, 0.2, sp, strict_unitarity=True)
        rho5 = reduced_detector_state(basis_state(sp, 0), cfg)
        v = coherent_state(cfg.t_alpha, sp).amplitudes
        np.testing.assert_allclose(rho5.matrix, np.outer(v, v.conj()), atol=1e-12)

    def test_closed_form_matches_partial_trace(self, oracle_config):
        rng = np.random.default_rng(3)
        z = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        amps = np.zeros(20, dtype=complex)
        amps[:8] = z / np.linalg.norm(z)
        psi = StateVector(FockSpace(20), amps)
        a = reduced_detector_state(psi, oracle_config, via="partial_trace")
        b = reduced_detector_state(psi, oracle_config, via="closed_form")
        assert np.max(np.abs(a.matrix - b.matrix)) < 1e-8

    def test_projective_limit_fidelity(self):
        # the closed form stays valid at the figure-scale drive amplitudes
        # where the two-mode construction cannot be represented
        sp = FockSpace(24)
        psi = superposition(sp, {1: 1.0})
        cfg = ChannelConfig.from_moduli(0.999987, 5e-7, 0.1, sp)
        rho5 = reduced_detector_state(psi, cfg, via="closed_form")
        from mzbell.optics import displacement_matrix

        target = displacement_matrix(cfg.t_alpha, sp).matrix @ psi.amplitudes
        fidelity = float(np.real(np.vdot(target, rho5.matrix @ target)))
        assert fidelity >= 1.0 - 1e-4

    def test_spectrum_nonnegative(self, oracle_config):
        psi = superposition(FockSpace(20), {0: 1.0, 1: 0.5, 3: 0.25})
        rho5 = reduced_detector_state(psi, oracle_config)
        assert rho5.min_eigenvalue() > -1e-12


class TestKraus:
    def test_trivial_channel_is_identity(self):
        cfg = ChannelConfig(t=0.0 + 0j, r_prime=1.0 + 0j, alpha=0.0 + 0j, space=FockSpace(8))
        ops = kraus_set(cfg)
        np.testing.assert_array_equal(ops[0].matrix, np.eye(8))
        assert all(np.linalg.norm(e.matrix) == 0.0 for e in ops[1:])

    def test_channel_equals_partial_trace(self):
        sp = FockSpace(32)
        cfg = ChannelConfig.from_moduli(0.0, 0.15, 0.15, sp, strict_unitarity=True)
        ops = silent(kraus_set, cfg)
        psi = superposition(sp, {0: 1.0, 1: 1.0, 4: 0.5})
        got = apply_kraus(ops, psi.projector())
        want = reduced_detector_state(psi, cfg)
        assert np.linalg.norm(got.matrix - want.matrix) < 1e-8

    def test_completeness_on_interior_block(self):
        sp = FockSpace(48)
        cfg = ChannelConfig.from_moduli(0.0, 0.1, 0.1, sp, strict_unitarity=True)
        ops = silent(kraus_set, cfg)
        assert cfg.interior_bound >= 16
        assert kraus_completeness_defect(ops, cfg.interior_bound) < 1e-8

    def test_completeness_deficit_shrinks_as_dim_doubles(self):
        # drive chosen so the smaller truncation is visibly leaky on the
        # fixed observed block; the margin-rule bound is empty this small
        defects = {}
        for dim in (12, 24):
            cfg = ChannelConfig.from_moduli(0.0, 0.4, 0.52, FockSpace(dim),
                                            strict_unitarity=True)
            defects[dim] = kraus_completeness_defect(silent(kraus_set, cfg), bound=2)
        assert defects[12] > 1e-8
        assert defects[24] < defects[12]


class TestPovm:
    def test_oracle_equivalence(self, oracle_config):
        sp = oracle_config.space
        states = [basis_state(sp, 0), basis_state(sp, 1), superposition(sp, {0: 1.0, 2: 1.0})]
        for psi in states:
            rho5 = reduced_detector_state(psi, oracle_config)
            for i in range(13):
                effect = povm_element(i, oracle_config)
                lhs = float(np.real(np.vdot(psi.amplitudes, effect.matrix @ psi.amplitudes)))
                assert abs(lhs - float(np.real(rho5.matrix[i, i]))) < 1e-6

    def test_limit_is_gcs_projector(self):
        cfg = ChannelConfig.from_moduli(0.999987, 5e-7, 0.1, FockSpace(50), i_max=50)
        for i in (0, 3):
            dist = np.linalg.norm(povm_element(i, cfg).matrix - gcs_projector(i, cfg).matrix)
            assert dist < 1e-3

    def test_limit_distance_decreases_along_figure_sequence(self):
        dists = []
        for r_prime, t in FIGURE_SEQUENCE:
            cfg = ChannelConfig.from_moduli(r_prime, t, 0.1, FockSpace(50), i_max=50)
            dists.append(np.linalg.norm(povm_element(0, cfg).matrix
                                        - gcs_projector(0, cfg).matrix))
        assert all(a > b for a, b in zip(dists, dists[1:]))

    def test_positivity_and_hermiticity(self):
        cfg = ChannelConfig.from_moduli(0.954, 5e-3, 0.1, FockSpace(30), i_max=14)
        povm = build_povm(cfg)
        assert povm.hermiticity_defect() < 1e-10
        assert povm.min_eigenvalue() >= -1e-8

    def test_completeness_deficit_is_counting_tail(self):
        cfg = ChannelConfig.from_moduli(0.0, 0.05, 0.1, FockSpace(10),
                                        strict_unitarity=True, i_max=8)
        povm = build_povm(cfg)
        acc = sum(e.matrix for e in povm.effects)
        ta = abs(cfg.t_alpha)
        tail = 1.0 - sum(math.exp(-ta * ta) * ta ** (2 * i) / math.factorial(i)
                         for i in range(9))
        assert abs((1.0 - acc[0, 0].real) - tail) < 1e-12

    def test_completeness_with_generous_count_ceiling(self):
        cfg = ChannelConfig.from_moduli(0.0, 0.05, 0.1, FockSpace(24),
                                        strict_unitarity=True, i_max=40)
        assert build_povm(cfg).completeness_defect() < 1e-8

    def test_count_above_ceiling_rejected(self, oracle_config):
        with pytest.raises(ValueError, match="i_max"):
            povm_element(13, oracle_config)
        with pytest.raises(ValueError):
            povm_element(-1, oracle_config)

    def test_undisplaced_channel_counts_binomially(self):
        cfg = ChannelConfig(t=0.6 + 0j, r_prime=0.8 + 0j, alpha=0.0 + 0j,
                            space=FockSpace(10), i_max=9)
        m1 = povm_element(1, cfg).matrix
        assert np.allclose(m1, np.diag(np.diag(m1)))
        # counting one of n photons: C(n,1) |R'|^2 |T'|^(2(n-1))
        assert m1[1, 1] == pytest.approx(0.64)
        assert m1[2, 2] == pytest.approx(2 * 0.64 * 0.36)


class TestGram:
    def test_projective_limit_is_nearly_diagonal(self):
        cfg = ChannelConfig.from_moduli(0.999987, 5e-7, 0.1, FockSpace(52), i_max=12)
        gram = gram_matrix(build_povm(cfg))
        diag = np.sqrt(np.outer(np.diag(gram), np.diag(gram)))
        ratio = gram / diag
        np.fill_diagonal(ratio, 0.0)
        assert ratio.max() < 1e-2

    def test_open_interferometer_is_visibly_nondiagonal(self):
        cfg = ChannelConfig.from_moduli(0.866, 0.5, 0.1, FockSpace(30), i_max=10)
        gram = gram_matrix(build_povm(cfg))
        diag = np.sqrt(np.outer(np.diag(gram), np.diag(gram)))
        ratio = gram / diag
        np.fill_diagonal(ratio, 0.0)
        assert ratio.max() > 0.1

    def test_small_set_is_symmetric(self):
        cfg = ChannelConfig.from_moduli(0.954, 5e-3, 0.1, FockSpace(16), i_max=1)
        gram = gram_matrix(build_povm(cfg))
        assert gram.shape == (2, 2)
        assert gram[0, 1] == pytest.approx(gram[1, 0])

    def test_diagonal_positive_over_supported_counts(self):
        cfg = ChannelConfig.from_moduli(0.954, 5e-3, 0.1, FockSpace(30), i_max=12)
        gram = gram_matrix(build_povm(cfg))
        ta = abs(cfg.t_alpha)
        top = int(ta * ta + 3.0 * ta)
        assert np.all(np.diag(gram)[: top + 1] > 0.0)


class TestEntanglementEntropy:
    def test_vacuum_input_is_separable(self):
        sp = FockSpace(20)
        cfg = ChannelConfig.from_moduli(0.0, 0.2, 0.2, sp, strict_unitarity=True)
        assert output_entanglement_entropy(basis_state(sp, 0), cfg) < 1e-12

    def test_single_photon_entropy_decreases_with_drive(self):
        sp = FockSpace(40)
        entropies = []
        for alpha in (0.5, 1.0, 2.0, 4.0):
            cfg = ChannelConfig.from_moduli(0.0, 0.1 / alpha, 0.1, sp,
                                            strict_unitarity=True)
            entropies.append(silent(output_entanglement_entropy, basis_state(sp, 1), cfg))
        assert all(a > b for a, b in zip(entropies, entropies[1:]))

    def test_single_photon_weak_drive_is_entangled(self):
        sp = FockSpace(24)
        cfg = ChannelConfig.from_moduli(0.0, 0.25, 0.25, sp, strict_unitarity=True)
        assert output_entanglement_entropy(basis_state(sp, 1), cfg) > 1e-3
