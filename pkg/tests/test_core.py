"""Unit and property tests for the quantum-core value types and operations."""

import numpy as np
import pytest

from rareqc.core import (
    ATOL_ALGEBRAIC,
    ATOL_SPECTRAL,
    DensityMatrix,
    DimensionMismatchError,
    InvalidChannelError,
    NoiseChannel,
    PAULI_X,
    PAULI_Z,
    PauliObservable,
    PureState,
    apply_channel,
    expectation,
    fidelity,
    make_amplitude_damping,
    make_bit_flip,
    make_confusion,
    make_phase_flip,
    project_physical,
    tensor,
)

KET0 = PureState(np.array([1, 0], dtype=complex))
KET1 = PureState(np.array([0, 1], dtype=complex))
PHI_PLUS = PureState(np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))


def random_density_matrix(rng, n_qubits):
    d = 2**n_qubits
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityMatrix(m / np.trace(m))


class TestTypes:
    def test_pure_state_requires_unit_norm(self):
        with pytest.raises(ValueError, match="squared-norm"):
            PureState(np.array([1.0, 1.0]))

    def test_density_matrix_rejects_bad_trace(self):
        with pytest.raises(ValueError, match="trace"):
            DensityMatrix(np.diag([0.6, 0.6]).astype(complex))

    def test_density_matrix_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.5], [0.0, 0.5]], dtype=complex)
        with pytest.raises(ValueError, match="Hermitian"):
            DensityMatrix(m)

    def test_density_matrix_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError, match="eigenvalue"):
            DensityMatrix(np.diag([1.5, -0.5]).astype(complex))

    def test_channel_rejects_incomplete_kraus(self):
        with pytest.raises(InvalidChannelError, match="completeness"):
            NoiseChannel((0.5 * np.eye(2, dtype=complex),))

    def test_pauli_observable_rejects_unknown_factor(self):
        with pytest.raises(ValueError):
            PauliObservable(("X", "Q"))

    def test_types_are_immutable(self):
        rho = DensityMatrix(np.diag([1.0, 0.0]).astype(complex))
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 5.0


class TestTensor:
    def test_basis_state_composition(self):
        out = tensor(KET0, KET0)
        np.testing.assert_allclose(out.amplitudes, [1, 0, 0, 0])

    def test_maximally_mixed_composition(self):
        half = DensityMatrix(np.eye(2, dtype=complex) / 2)
        out = tensor(half, half)
        np.testing.assert_allclose(out.matrix, np.eye(4) / 4)

    def test_mixed_diagonal_against_direct_matrix_oracle(self):
        # Independent oracle: the 4x4 product state written out by hand.
        left = KET0.to_density_matrix()
        right = DensityMatrix(np.diag([0.6, 0.4]).astype(complex))
        out = tensor(left, right)
        np.testing.assert_allclose(out.matrix, np.diag([0.6, 0.4, 0.0, 0.0]), atol=1e-15)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            tensor(KET0, KET0.to_density_matrix())


class TestApplyChannel:
    def test_zero_probability_bit_flip_is_identity(self):
        rng = np.random.default_rng(1)
        rho = random_density_matrix(rng, 2)
        out = apply_channel(rho, make_bit_flip(0.0), [1])
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_half_probability_bit_flip_depolarizes_ground_state(self):
        rho = KET0.to_density_matrix()
        out = apply_channel(rho, make_bit_flip(0.5), [0])
        np.testing.assert_allclose(out.matrix, np.eye(2) / 2, atol=1e-15)

    def test_amplitude_damping_on_excited_state_matches_quoted_decay(self):
        # gamma = 1 - exp(-1.6 us / 1.9 ms), the excited-state decay probability.
        gamma = float(-np.expm1(-1.6e-6 / 1.9e-3))
        out = apply_channel(KET1.to_density_matrix(), make_amplitude_damping(gamma), [0])
        np.testing.assert_allclose(out.matrix, np.diag([gamma, 1 - gamma]), atol=1e-15)
        assert gamma == pytest.approx(8e-4, rel=0.06)

    def test_dimension_mismatch_raises_invalid_channel(self):
        rho = KET0.to_density_matrix()
        with pytest.raises(InvalidChannelError):
            apply_channel(rho, make_bit_flip(0.1), [0, 1])

    def test_duplicate_targets_rejected(self):
        rho = tensor(KET0, KET0).to_density_matrix()
        with pytest.raises(ValueError, match="distinct"):
            apply_channel(rho, make_bit_flip(0.1), [0, 0])

    def test_lift_acts_on_requested_qubit_only(self):
        rho = tensor(KET0.to_density_matrix(), KET0.to_density_matrix())
        out = apply_channel(rho, make_bit_flip(1.0), [1])
        expected = tensor(KET0.to_density_matrix(), KET1.to_density_matrix())
        np.testing.assert_allclose(out.matrix, expected.matrix, atol=1e-15)


class TestChannelFactories:
    def test_bit_flip_kraus_forms(self):
        p = 4e-4
        ch = make_bit_flip(p)
        np.testing.assert_allclose(ch.kraus_ops[0], np.sqrt(1 - p) * np.eye(2), atol=1e-15)
        np.testing.assert_allclose(ch.kraus_ops[1], np.sqrt(p) * PAULI_X, atol=1e-15)

    def test_amplitude_damping_zero_has_trivial_second_operator(self):
        ch = make_amplitude_damping(0.0)
        np.testing.assert_allclose(ch.kraus_ops[0], np.eye(2), atol=1e-15)
        np.testing.assert_allclose(ch.kraus_ops[1], np.zeros((2, 2)), atol=1e-15)

    def test_full_phase_flip_is_deterministic_z(self):
        plus = PureState(np.array([1, 1], dtype=complex) / np.sqrt(2))
        minus = PureState(np.array([1, -1], dtype=complex) / np.sqrt(2))
        out = apply_channel(plus.to_density_matrix(), make_phase_flip(1.0), [0])
        np.testing.assert_allclose(out.matrix, minus.to_density_matrix().matrix, atol=1e-15)

    @pytest.mark.parametrize("factory", [make_bit_flip, make_phase_flip, make_amplitude_damping])
    def test_parameter_out_of_range_raises(self, factory):
        with pytest.raises(ValueError):
            factory(-0.1)
        with pytest.raises(ValueError):
            factory(1.1)

    @pytest.mark.parametrize("factory", [make_bit_flip, make_phase_flip, make_amplitude_damping])
    def test_completeness_across_parameter_range(self, factory):
        # Endpoints plus 100 random interior points.
        rng = np.random.default_rng(7)
        for p in [0.0, 1.0, *rng.random(100)]:
            ch = factory(p)
            total = sum(k.conj().T @ k for k in ch.kraus_ops)
            assert np.abs(total - np.eye(2)).max() < ATOL_SPECTRAL

    def test_confusion_channel_completeness_and_action(self):
        ch = make_confusion(0.3, 0.1)
        total = sum(k.conj().T @ k for k in ch.kraus_ops)
        assert np.abs(total - np.eye(2)).max() < ATOL_SPECTRAL
        out = apply_channel(KET0.to_density_matrix(), ch, [0])
        np.testing.assert_allclose(out.matrix, np.diag([0.7, 0.3]), atol=1e-15)


class TestFidelity:
    def test_pure_state_against_itself(self):
        assert fidelity(PHI_PLUS.to_density_matrix(), PHI_PLUS) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_two_qubits(self):
        assert fidelity(DensityMatrix.maximally_mixed(2), PHI_PLUS) == pytest.approx(0.25, abs=1e-12)

    def test_bit_flip_on_second_qubit_of_bell_state(self):
        # Symbolic 4x4 oracle: rho = (1-p) |phi><phi| + p X1 |phi><phi| X1,
        # and X1|phi+> is orthogonal to |phi+>, so F = 1 - p exactly.
        p = 0.037
        rho = apply_channel(PHI_PLUS.to_density_matrix(), make_bit_flip(p), [1])
        x1 = np.kron(np.eye(2), PAULI_X)
        psi = PHI_PLUS.amplitudes
        oracle = (1 - p) * abs(np.vdot(psi, psi)) ** 2 + p * abs(np.vdot(psi, x1 @ psi)) ** 2
        assert fidelity(rho, PHI_PLUS) == pytest.approx(oracle, abs=1e-12)
        assert fidelity(rho, PHI_PLUS) == pytest.approx(1 - p, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fidelity(DensityMatrix.maximally_mixed(1), PHI_PLUS)

    def test_linearity_in_the_state(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            rho1 = random_density_matrix(rng, 2)
            rho2 = random_density_matrix(rng, 2)
            alpha = rng.random()
            blend = DensityMatrix(alpha * rho1.matrix + (1 - alpha) * rho2.matrix)
            lhs = fidelity(blend, PHI_PLUS)
            rhs = alpha * fidelity(rho1, PHI_PLUS) + (1 - alpha) * fidelity(rho2, PHI_PLUS)
            assert lhs == pytest.approx(rhs, abs=1e-12)


class TestExpectation:
    def test_zz_on_bell_state(self):
        assert expectation(PHI_PLUS.to_density_matrix(), PauliObservable(("Z", "Z"))) == pytest.approx(1.0, abs=1e-12)

    def test_xi_on_ground_state(self):
        rho = tensor(KET0, KET0).to_density_matrix()
        assert expectation(rho, PauliObservable(("X", "I"))) == pytest.approx(0.0, abs=1e-12)

    def test_xx_on_werner_like_mixture_against_trace_oracle(self):
        eps = 0.23
        rho = DensityMatrix((1 - eps) * PHI_PLUS.to_density_matrix().matrix + eps * np.eye(4) / 4)
        # Direct trace oracle with an independently built Pauli matrix.
        xx = np.kron(PAULI_X, PAULI_X)
        oracle = float(np.trace(rho.matrix @ xx).real)
        value = expectation(rho, PauliObservable(("X", "X")))
        assert value == pytest.approx(oracle, abs=1e-12)
        assert value == pytest.approx(1 - eps, abs=1e-12)

    def test_identity_observable_is_exactly_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            rho = random_density_matrix(rng, 2)
            assert expectation(rho, PauliObservable(("I", "I"))) == pytest.approx(1.0, abs=1e-12)

    def test_bounds_on_random_states(self):
        rng = np.random.default_rng(5)
        labels = ["I", "X", "Y", "Z"]
        for _ in range(200):
            rho = random_density_matrix(rng, 2)
            obs = PauliObservable((labels[rng.integers(4)], labels[rng.integers(4)]))
            assert -1 - 1e-10 <= expectation(rho, obs) <= 1 + 1e-10


class TestProjectPhysical:
    def test_idempotent_on_valid_state(self):
        rng = np.random.default_rng(9)
        rho = random_density_matrix(rng, 2)
        out = project_physical(rho.matrix)
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-10)

    def test_two_level_simplex_projection_by_hand(self):
        # Simplex projection of eigenvalues (1.1, -0.1): shift by tau = 0.1
        # and clip, giving exactly (1, 0).
        out = project_physical(np.diag([1.1, -0.1]))
        np.testing.assert_allclose(out.matrix, np.diag([1.0, 0.0]), atol=1e-12)

    def test_pure_renormalization(self):
        out = project_physical(np.diag([0.6, 0.6]))
        np.testing.assert_allclose(out.matrix, np.diag([0.5, 0.5]), atol=1e-12)

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            project_physical(np.array([[1.0, 1.0], [0.0, 0.0]]))

    def test_result_is_nearest_in_frobenius_norm(self):
        # Hand solution: shift (0.9, 0.4, -0.3, 0) by tau = 0.15 after zeroing
        # the negative part gives (0.75, 0.25, 0, 0).
        evals = np.array([0.9, 0.4, -0.3, 0.0])
        out = np.sort(np.diag(project_physical(np.diag(evals)).matrix.real))[::-1]
        np.testing.assert_allclose(out, [0.75, 0.25, 0.0, 0.0], atol=1e-12)
        # Monte Carlo optimality oracle: no sampled simplex point is closer.
        rng = np.random.default_rng(31)
        best_dist = np.sum((out - evals) ** 2)
        samples = rng.dirichlet(np.ones(4), size=5000)
        sample_dists = np.sum((samples - evals) ** 2, axis=1)
        assert sample_dists.min() >= best_dist - 1e-12


class TestChannelProperties:
    def test_trace_and_hermiticity_preserved_over_random_draws(self):
        rng = np.random.default_rng(17)
        factories = [make_bit_flip, make_phase_flip, make_amplitude_damping]
        for _ in range(1000):
            rho = random_density_matrix(rng, 2)
            factory = factories[rng.integers(3)]
            out = apply_channel(rho, factory(float(rng.random())), [int(rng.integers(2))])
            assert abs(np.trace(out.matrix).real - 1.0) < 1e-10
            assert np.abs(out.matrix - out.matrix.conj().T).max() < ATOL_ALGEBRAIC
            assert np.linalg.eigvalsh(out.matrix).min() > -ATOL_SPECTRAL

    def test_disjoint_qubit_channels_commute(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            rho = random_density_matrix(rng, 2)
            ch0 = make_bit_flip(float(rng.random()))
            ch1 = make_amplitude_damping(float(rng.random()))
            ab = apply_channel(apply_channel(rho, ch0, [0]), ch1, [1])
            ba = apply_channel(apply_channel(rho, ch1, [1]), ch0, [0])
            assert np.abs(ab.matrix - ba.matrix).max() < 1e-12
