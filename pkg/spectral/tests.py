import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy.linalg import expm

from hilbert.exceptions import DegenerateSteadyStateError, SeriesDivergenceError
from hilbert.operators import PAULI_MATRICES, SIGMA_MINUS, DensityMatrix
from hilbert.superoperators import (
    SuperOp,
    dissipator_superop,
    random_lindbladian,
    vectorize,
)
from xyz_model.lattice import QubitLattice
from xyz_model.model import ModelSpec, full_lindbladian

from .decomposition import (
    evolution_superoperator,
    evolve_exact,
    generalized_inverse,
    match_eigenvalues,
    relaxation_gap,
    spectrum,
    steady_state_exact,
    steady_state_of_channel,
)
from .perturbation import (
    perturb_eigenvalue,
    perturb_eigenvector,
    perturb_steady_state,
    perturbative_expectation,
)

DOWN = np.diag([0.0, 1.0]).astype(complex)


class SpectrumTest(SimpleTestCase):
    """
    Diagonalization of small generators with known spectra.
    """

    def setUp(self):
        self.decay = dissipator_superop(SIGMA_MINUS, 1.0)

    def test_decay_spectrum(self):
        decomposition = spectrum(self.decay)
        np.testing.assert_allclose(decomposition.eigenvalues, [0, -0.5, -0.5, -1], atol=1e-12)
        self.assertEqual(decomposition.clusters, [[1, 2]])

    def test_biorthonormal(self):
        rng = np.random.default_rng(5)
        decomposition = spectrum(random_lindbladian(2, rng))
        np.testing.assert_allclose(decomposition.left @ decomposition.right, np.eye(16), atol=1e-8)
        self.assertLessEqual(decomposition.residual, 1e-8)

    def test_decay_steady_state_and_gap(self):
        np.testing.assert_allclose(steady_state_exact(self.decay).matrix, DOWN, atol=1e-12)
        self.assertAlmostEqual(relaxation_gap(self.decay), 0.5, places=12)

    def test_model_steady_state_is_null_vector(self):
        generator = full_lindbladian(ModelSpec(QubitLattice(2)).with_g(0.1))
        rho = steady_state_exact(generator)
        self.assertAlmostEqual(np.trace(rho.matrix).real, 1.0, places=10)
        self.assertLess(np.max(np.abs(generator.matrix @ vectorize(rho.matrix))), 1e-10)
        self.assertGreater(relaxation_gap(generator), 0.0)

    def test_generalized_inverse(self):
        rng = np.random.default_rng(8)
        generator = random_lindbladian(1, rng)
        decomposition = spectrum(generator)
        inverse = generalized_inverse(decomposition).matrix
        complement = np.eye(4) - decomposition.projector(0)
        np.testing.assert_allclose(generator.matrix @ inverse, complement, atol=1e-10)
        np.testing.assert_allclose(inverse @ generator.matrix, complement, atol=1e-10)

    def test_evolution_matches_matrix_exponential(self):
        generator = random_lindbladian(1, np.random.default_rng(1))
        propagator = evolution_superoperator(spectrum(generator), 0.7)
        np.testing.assert_allclose(propagator.matrix, expm(0.7 * generator.matrix), atol=1e-10)
        rho = DensityMatrix.random(1, np.random.default_rng(2))
        evolved = evolve_exact(generator, rho, 0.7)
        np.testing.assert_allclose(evolved.matrix, propagator.apply(rho), atol=1e-10)

    def test_channel_fixed_point(self):
        channel = self.decay.exp(0.3)
        np.testing.assert_allclose(steady_state_of_channel(channel).matrix, DOWN, atol=1e-10)

    def test_degenerate_steady_state_rejected(self):
        dephasing = dissipator_superop(PAULI_MATRICES['Z'], 1.0)
        with self.assertRaises(DegenerateSteadyStateError):
            steady_state_exact(dephasing)
        with self.assertRaises(DegenerateSteadyStateError):
            steady_state_of_channel(SuperOp.identity(2))

    def test_oversized_generator_rejected(self):
        with self.assertRaises(ValidationError):
            spectrum(np.zeros((4 ** 7, 1)))


class MatchEigenvaluesTest(SimpleTestCase):

    def test_conjugate_pairs_stay_together(self):
        reference = np.array([0.0, -1 + 2j, -1 - 2j, -3.0])
        candidates = np.array([-3.1, -1.1 - 2.05j, 0.01, -1.1 + 2.05j])
        report = match_eigenvalues(reference, candidates)
        pairs = {match.reference: match.candidate for match in report.matches}
        self.assertEqual(pairs, {0: 2, 1: 3, 2: 1, 3: 0})
        self.assertEqual(report.unmatched_reference, [])
        self.assertEqual(report.unmatched_candidates, [])

    def test_radius_leaves_values_unmatched(self):
        report = match_eigenvalues([0.0, -1.0], [0.01, -5.0], radius=0.5)
        self.assertEqual([(m.reference, m.candidate) for m in report.matches], [(0, 0)])
        self.assertEqual(report.unmatched_reference, [1])
        self.assertEqual(report.unmatched_candidates, [1])

    def test_ambiguous_pairing_flagged(self):
        report = match_eigenvalues([-1.0], [-1.05, -0.97], radius=0.1)
        self.assertEqual(len(report.ambiguous), 1)
        self.assertEqual(report.matches[0].candidate, 1)


class PerturbationTest(SimpleTestCase):
    """
    Perturbation series against exact diagonalization of L0 + eps L1.
    """

    def setUp(self):
        rng = np.random.default_rng(21)
        self.base = random_lindbladian(2, rng)
        self.direction = random_lindbladian(2, rng)

    def test_steady_state_series_converges(self):
        eps = 0.02
        perturbation = self.direction * eps
        result = perturb_steady_state(self.base, perturbation, k_max=4)
        exact = steady_state_exact(self.base + perturbation).matrix
        errors = [np.linalg.norm(result.partial_sum(k) - exact) for k in range(5)]
        for lower, higher in zip(errors, errors[1:]):
            self.assertLess(higher, lower)
        for correction in result.corrections[1:]:
            self.assertAlmostEqual(abs(np.trace(correction)), 0.0, places=12)

    def test_first_order_error_is_quadratic(self):
        errors = []
        for eps in (0.01, 0.005):
            perturbation = self.direction * eps
            result = perturb_steady_state(self.base, perturbation, k_max=1)
            exact = steady_state_exact(self.base + perturbation).matrix
            errors.append(np.linalg.norm(result.partial_sum(1) - exact))
        self.assertGreater(errors[0] / errors[1], 3.5)

    def test_eigenvalue_corrections(self):
        decomposition = spectrum(self.base)
        index = 1
        eps = 1e-3
        first, second = perturb_eigenvalue(decomposition, self.direction, index)
        exact = spectrum(self.base + self.direction * eps).eigenvalues
        target = decomposition.eigenvalues[index]
        approximated = target + eps * first + eps ** 2 * second
        nearest = exact[np.argmin(np.abs(exact - approximated))]
        self.assertLess(abs(nearest - approximated), abs(nearest - (target + eps * first)))
        self.assertLess(abs(nearest - approximated), 1e-6)

    def test_eigenvector_correction_is_orthogonal_to_mode(self):
        decomposition = spectrum(self.base)
        correction = perturb_eigenvector(decomposition, self.direction, 2)
        self.assertAlmostEqual(abs(decomposition.left[2] @ correction), 0.0, places=10)

    def test_divergent_series_raises(self):
        with self.assertRaises(SeriesDivergenceError):
            perturb_steady_state(self.base, self.direction * 50.0, k_max=12)

    def test_degenerate_mode_rejected(self):
        decay = dissipator_superop(SIGMA_MINUS, 1.0)
        with self.assertRaises(ValidationError):
            perturb_eigenvalue(decay, dissipator_superop(PAULI_MATRICES['Z'], 1.0), 1)

    def test_expectation_partial_sums(self):
        result = perturb_steady_state(self.base, self.direction * 0.01, k_max=3)
        observable = np.kron(PAULI_MATRICES['Z'], np.eye(2))
        terms, sums = perturbative_expectation(observable, result)
        self.assertEqual(terms.size, 4)
        exact = steady_state_exact(self.base + self.direction * 0.01)
        self.assertAlmostEqual(sums[-1], np.trace(observable @ exact.matrix).real, places=6)
