import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .channels import LocalChannel, apply_local_channel
from .exceptions import ChannelNotCPTPError
from .operators import (
    PAULI_MATRICES,
    SIGMA_MINUS,
    DenseOperator,
    DensityMatrix,
    check_state,
    embed_local,
    partial_trace,
    pauli_string,
    trace_distance,
)
from .superoperators import (
    SuperOp,
    apply_lindbladian_directly,
    choi_matrix,
    devectorize,
    embed_superoperator,
    from_pauli_transfer_matrix,
    hs_inner,
    is_cptp,
    lindbladian_matrix,
    pauli_transfer_matrix,
    random_channel,
    random_kraus,
    random_lindbladian,
    vectorize,
)

X, Y, Z, I2 = (PAULI_MATRICES[label] for label in 'XYZI')


def sorted_eigenvalues(matrix):
    values = np.linalg.eigvals(matrix)
    return values[np.lexsort((values.imag, values.real))]


class VectorizationTest(SimpleTestCase):
    """
    Row-stacking vectorization and the Hilbert-Schmidt inner product.
    """

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_identity_vector(self):
        np.testing.assert_array_equal(vectorize(I2), [1, 0, 0, 1])

    def test_pauli_inner_products(self):
        self.assertAlmostEqual(hs_inner(Z, Z), 2.0, places=12)
        self.assertAlmostEqual(abs(hs_inner(X, Y)), 0.0, places=12)

    def test_round_trip_and_isometry(self):
        for case in range(100):
            with self.subTest(case=case):
                A = self.rng.normal(size=(4, 4)) + 1j * self.rng.normal(size=(4, 4))
                B = self.rng.normal(size=(4, 4)) + 1j * self.rng.normal(size=(4, 4))
                np.testing.assert_array_equal(devectorize(vectorize(A)), A)
                self.assertAlmostEqual(
                    abs(hs_inner(A, B) - np.trace(A.conj().T @ B)), 0.0, places=12
                )
                self.assertAlmostEqual(
                    np.linalg.norm(vectorize(A)) ** 2, np.trace(A.conj().T @ A).real, places=10
                )

    def test_sandwich_identity(self):
        """vec(A X B) = (A kron B^T) vec(X) holds for the chosen convention."""
        A, B, M = (self.rng.normal(size=(2, 2)) for _ in range(3))
        np.testing.assert_allclose(np.kron(A, B.T) @ vectorize(M), vectorize(A @ M @ B), atol=1e-12)

    def test_non_square_vector_rejected(self):
        with self.assertRaises(ValidationError):
            devectorize(np.ones(5))


class LindbladianMatrixTest(SimpleTestCase):
    """
    Construction of the Lindbladian matrix.
    """

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_single_decay_spectrum(self):
        gamma = 0.7
        L = lindbladian_matrix(np.zeros((2, 2)), [(SIGMA_MINUS, gamma)])
        np.testing.assert_allclose(
            sorted_eigenvalues(L.matrix), [-gamma, -gamma / 2, -gamma / 2, 0], atol=1e-12
        )

    def test_empty_model_is_zero(self):
        L = lindbladian_matrix(np.zeros((2, 2)))
        np.testing.assert_array_equal(L.matrix, np.zeros((4, 4)))

    def test_precession_spectrum(self):
        L = lindbladian_matrix(Z)
        values = np.linalg.eigvals(L.matrix)
        for expected in (0, 0, 2j, -2j):
            self.assertLess(np.min(np.abs(values - expected)), 1e-12)

    def test_rejects_non_hermitian_hamiltonian(self):
        with self.assertRaises(ValidationError):
            lindbladian_matrix(SIGMA_MINUS)

    def test_rejects_negative_rate(self):
        with self.assertRaises(ValidationError):
            lindbladian_matrix(Z, [(SIGMA_MINUS, -0.1)])

    def test_rejects_hermitian_claim_that_fails(self):
        with self.assertRaises(ValidationError):
            DenseOperator(SIGMA_MINUS, hermitian=True)

    def test_matches_direct_evaluation(self):
        hamiltonian = np.kron(X, X) + 0.3 * np.kron(Z, I2)
        jumps = [(np.kron(SIGMA_MINUS, I2), 1.0), (np.kron(I2, SIGMA_MINUS), 0.5)]
        L = lindbladian_matrix(hamiltonian, jumps)
        self.assertTrue(L.is_trace_annihilating())
        for case in range(100):
            with self.subTest(case=case):
                rho = DensityMatrix.random(2, self.rng)
                np.testing.assert_allclose(
                    L.apply(rho),
                    apply_lindbladian_directly(hamiltonian, jumps, rho.matrix),
                    atol=1e-10,
                )

    def test_exponential_keeps_states_valid(self):
        """exp(Lt) maps states to states for random generators and times."""
        for case in range(100):
            with self.subTest(case=case):
                n_qubits = 1 + case % 2
                L = random_lindbladian(n_qubits, self.rng)
                self.assertTrue(L.is_trace_annihilating())
                t = float(self.rng.uniform(0, 10))
                rho = DensityMatrix.random(n_qubits, self.rng)
                check_state(L.exp(t).apply(rho))


class EmbeddingTest(SimpleTestCase):
    """
    Embedding local operators in the lattice space.
    """

    def test_first_site_is_leftmost_factor(self):
        np.testing.assert_array_equal(embed_local(Z, [0], 2).matrix, np.kron(Z, I2))

    def test_identity_embeds_to_identity(self):
        np.testing.assert_array_equal(embed_local(I2, [2], 3).matrix, np.eye(8))

    def test_pauli_normalization(self):
        op = embed_local(X, [1], 3).matrix
        self.assertAlmostEqual(np.trace(op @ op).real, 8.0)

    def test_two_site_order_follows_sites(self):
        embedded = embed_local(np.kron(X, Z), [2, 0], 3).matrix
        np.testing.assert_allclose(embedded, pauli_string('ZIX'))

    def test_overlapping_sites_rejected(self):
        with self.assertRaises(ValidationError):
            embed_local(np.kron(X, X), [1, 1], 3)

    def test_out_of_range_site_rejected(self):
        with self.assertRaises(ValidationError):
            embed_local(X, [3], 3)

    def test_partial_trace_of_product(self):
        first = DensityMatrix.from_bloch((0.2, 0.0, 0.5))
        second = DensityMatrix.from_bloch((0.0, -0.4, 0.1))
        product = DensityMatrix.product([first, second])
        np.testing.assert_allclose(partial_trace(product, [1], 2), second.matrix, atol=1e-14)
        np.testing.assert_allclose(partial_trace(product, [0], 2), first.matrix, atol=1e-14)

    def test_trace_distance_is_half_the_trace_norm(self):
        up, down = DensityMatrix.from_bloch((0, 0, 1)), DensityMatrix.from_bloch((0, 0, -1))
        self.assertAlmostEqual(trace_distance(up.matrix, down.matrix), 1.0, places=12)
        self.assertAlmostEqual(up.trace_distance(up), 0.0, places=12)
        # qubits sit at half their Bloch-vector separation
        first = DensityMatrix.from_bloch((0.3, -0.2, 0.5))
        second = DensityMatrix.from_bloch((0.0, 0.4, -0.1))
        separation = np.linalg.norm(np.subtract((0.3, -0.2, 0.5), (0.0, 0.4, -0.1)))
        self.assertAlmostEqual(first.trace_distance(second), separation / 2, places=12)


class LocalChannelTest(SimpleTestCase):
    """
    apply_local_channel against dense embeddings.
    """

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def test_identity_channel(self):
        rho = DensityMatrix.random(3, self.rng)
        result = apply_local_channel(rho, SuperOp.identity(4), (0, 2))
        np.testing.assert_allclose(result.matrix, rho.matrix, atol=1e-14)

    def test_full_depolarizing_site(self):
        reset = SuperOp(0.5 * np.outer(vectorize(I2), vectorize(I2)))
        rho = DensityMatrix.random(3, self.rng)
        result = apply_local_channel(rho, reset, (1,))
        np.testing.assert_allclose(partial_trace(result, [1], 3), I2 / 2, atol=1e-12)
        np.testing.assert_allclose(
            partial_trace(result, [0, 2], 3), partial_trace(rho, [0, 2], 3), atol=1e-12
        )

    def test_matches_dense_and_kraus_routes(self):
        for case in range(100):
            with self.subTest(case=case):
                n_sites = 2 + case % 2
                sites = tuple(self.rng.choice(n_sites, size=2, replace=False))
                krauses = random_kraus(2, self.rng, kraus_rank=int(self.rng.integers(1, 5)))
                channel = sum(np.kron(K, K.conj()) for K in krauses)
                rho = DensityMatrix.random(n_sites, self.rng)

                result = apply_local_channel(rho, channel, sites)
                dense = embed_superoperator(channel, sites, n_sites).apply(rho)
                kraus = sum(
                    embed_local(K, sites, n_sites).matrix @ rho.matrix
                    @ embed_local(K, sites, n_sites).matrix.conj().T
                    for K in krauses
                )
                np.testing.assert_allclose(result.matrix, dense, atol=1e-10)
                np.testing.assert_allclose(result.matrix, kraus, atol=1e-10)
                self.assertAlmostEqual(np.trace(result.matrix).real, 1.0, places=10)

    def test_single_site_channel_on_three_qubits(self):
        channel = random_channel(1, self.rng)
        rho = DensityMatrix.random(3, self.rng)
        result = apply_local_channel(rho, channel, (2,))
        dense = embed_superoperator(channel, (2,), 3).apply(rho)
        np.testing.assert_allclose(result.matrix, dense, atol=1e-10)

    def test_adjacent_sites_match_explicit_kron(self):
        krauses = random_kraus(2, self.rng)
        rho = DensityMatrix.random(3, self.rng)
        channel = sum(np.kron(K, K.conj()) for K in krauses)
        expected = sum(np.kron(K, I2) @ rho.matrix @ np.kron(K, I2).conj().T for K in krauses)
        result = apply_local_channel(rho, channel, (0, 1))
        np.testing.assert_allclose(result.matrix, expected, atol=1e-12)

    def test_non_trace_preserving_channel_rejected(self):
        with self.assertRaises(ChannelNotCPTPError):
            apply_local_channel(DensityMatrix.maximally_mixed(2), 0.5 * np.eye(4), (0,))

    def test_non_positive_channel_rejected(self):
        # transpose map: trace preserving but not completely positive
        transpose = np.eye(4)[[0, 2, 1, 3]]
        with self.assertRaises(ChannelNotCPTPError):
            apply_local_channel(DensityMatrix.maximally_mixed(1), transpose, (0,))

    def test_three_site_channel_rejected(self):
        with self.assertRaises(ValidationError):
            LocalChannel(SuperOp.identity(8), (0, 1, 2))

    def test_fused_channels(self):
        first, second = random_channel(1, self.rng), random_channel(1, self.rng)
        rho = DensityMatrix.random(2, self.rng)
        fused = LocalChannel(first, (1,)).then(LocalChannel(second, (1,)))
        expected = apply_local_channel(apply_local_channel(rho, first, (1,)), second, (1,))
        np.testing.assert_allclose(fused.apply(rho).matrix, expected.matrix, atol=1e-12)


class ChannelRepresentationTest(SimpleTestCase):
    """
    Choi and Pauli-transfer representations.
    """

    def setUp(self):
        self.rng = np.random.default_rng(5)

    def test_random_channels_are_cptp(self):
        for case in range(100):
            with self.subTest(case=case):
                self.assertTrue(is_cptp(random_channel(1 + case % 2, self.rng)))

    def test_identity_choi_is_bell_projector(self):
        choi = choi_matrix(SuperOp.identity(2))
        bell = vectorize(I2)
        np.testing.assert_allclose(choi, np.outer(bell, bell), atol=1e-14)

    def test_transfer_matrix_of_identity(self):
        np.testing.assert_allclose(pauli_transfer_matrix(SuperOp.identity(4)), np.eye(16), atol=1e-14)

    def test_transfer_matrix_round_trip(self):
        channel = random_channel(2, self.rng)
        rebuilt = from_pauli_transfer_matrix(pauli_transfer_matrix(channel))
        np.testing.assert_allclose(rebuilt.matrix, channel.matrix, atol=1e-12)

    def test_transfer_matrix_is_real(self):
        transfer = pauli_transfer_matrix(random_channel(1, self.rng))
        self.assertFalse(np.iscomplexobj(transfer))
        self.assertAlmostEqual(transfer[0, 0], 1.0, places=12)
