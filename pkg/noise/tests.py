import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from hilbert.exceptions import ChannelNotCPTPError, SingularChannelError
from hilbert.operators import PAULI_MATRICES, SIGMA_MINUS, pauli_string
from hilbert.superoperators import (
    SuperOp,
    conjugation_superop,
    dissipator_superop,
    is_cptp,
    kraus_superop,
    pauli_transfer_matrix,
)
from xyz_model.lattice import QubitLattice
from xyz_model.model import ModelSpec, build_xyz, z2_superoperator

from .generators import (
    NoiseModel,
    allowed_pauli_labels,
    attach_noise,
    depolarizing_generator,
    depolarizing_norm,
    noise_norm,
    transverse_damping_generator,
)
from .twirling import (
    PauliChannel,
    QuasiProbabilityScheme,
    boost_error,
    depolarizing_pauli_channel,
    depolarizing_target,
    pauli_twirl,
)


def two_by_two_schedule():
    schedule, _ = build_xyz(ModelSpec(QubitLattice(2)).with_g(0.1))
    return schedule


class NoiseGeneratorTest(SimpleTestCase):
    """
    Trace annihilation, positivity and normalization of every noise kind.
    """

    def setUp(self):
        self.schedule = two_by_two_schedule()
        self.bond = self.schedule[0]
        self.dissipator = self.schedule[-1]

    def test_generators_are_trace_annihilating(self):
        for kind in ('depolarizing', 'random-pauli', 'transverse-damping'):
            for gate in (self.bond, self.dissipator):
                with self.subTest(kind=kind, gate=gate.label):
                    generator = NoiseModel(kind).generator_for(gate)
                    self.assertTrue(generator.is_trace_annihilating())

    def test_noise_channels_are_cptp(self):
        for kind in ('depolarizing', 'random-pauli', 'transverse-damping'):
            for gate in (self.bond, self.dissipator):
                with self.subTest(kind=kind, gate=gate.label):
                    generator = NoiseModel(kind).generator_for(gate)
                    self.assertTrue(is_cptp(generator.exp(0.05)))

    def test_depolarizing_fixes_maximally_mixed_state(self):
        for sites in ((0,), (0, 1)):
            with self.subTest(sites=sites):
                dim = 2 ** len(sites)
                channel = depolarizing_generator(sites).exp(0.3)
                rho = np.eye(dim) / dim
                np.testing.assert_allclose(channel.apply(rho), rho, atol=1e-12)

    def test_depolarizing_contracts_bloch_vector(self):
        channel = depolarizing_generator((0,)).exp(0.2)
        transfer = pauli_transfer_matrix(channel)
        np.testing.assert_allclose(np.diag(transfer), [1, *[np.exp(-0.2)] * 3], atol=1e-12)

    def test_normalization_matches_depolarizing_norm(self):
        for kind in ('random-pauli', 'transverse-damping'):
            for gate in (self.bond, self.dissipator):
                with self.subTest(kind=kind, gate=gate.label):
                    generator = NoiseModel(kind).generator_for(gate)
                    self.assertAlmostEqual(noise_norm(generator), depolarizing_norm(gate.n_sites), places=10)

    def test_unnormalized_generator_keeps_raw_scale(self):
        model = NoiseModel('transverse-damping', normalize=False)
        self.assertEqual(model.norm_factor(self.dissipator), 1.0)
        np.testing.assert_allclose(
            model.generator_for(self.dissipator).matrix,
            transverse_damping_generator((0,)).matrix,
        )

    def test_two_site_transverse_damping_sums_sites(self):
        single = transverse_damping_generator((0,))
        pair = transverse_damping_generator((0, 1))
        rho = np.kron(np.diag([0.7, 0.3]), np.diag([0.2, 0.8])).astype(complex)
        local = single.apply(np.diag([0.7, 0.3]).astype(complex))
        expected_action = np.kron(local, np.diag([0.2, 0.8])) + np.kron(
            np.diag([0.7, 0.3]), single.apply(np.diag([0.2, 0.8]).astype(complex))
        )
        np.testing.assert_allclose(pair.apply(rho), expected_action, atol=1e-12)

    def test_z2_symmetry_of_kinds(self):
        for kind, symmetric in (('depolarizing', True), ('random-pauli', True), ('transverse-damping', False)):
            for gate in (self.bond, self.dissipator):
                with self.subTest(kind=kind, gate=gate.label):
                    generator = NoiseModel(kind).generator_for(gate)
                    parity = z2_superoperator(gate.n_sites)
                    defect = parity.commutator(generator).norm()
                    self.assertEqual(defect < 1e-12, symmetric)
                    self.assertEqual(NoiseModel(kind).symmetric, symmetric)

    def test_none_kind_is_silent(self):
        generator = NoiseModel('none').generator_for(self.bond)
        self.assertEqual(generator.norm(), 0.0)


class RandomPauliTest(SimpleTestCase):

    def test_bond_labels_commute_with_zz(self):
        zz = pauli_string('ZZ')
        labels = allowed_pauli_labels('bond', 'x')
        self.assertEqual(len(labels), 7)
        for label in labels:
            with self.subTest(label=label):
                matrix = pauli_string(label)
                np.testing.assert_allclose(matrix @ zz, zz @ matrix)

    def test_loosened_labels_follow_gate_axis(self):
        xx = pauli_string('XX')
        labels = allowed_pauli_labels('bond', 'x', loosened=True)
        self.assertIn('XI', labels)
        self.assertNotIn('ZI', labels)
        for label in labels:
            matrix = pauli_string(label)
            np.testing.assert_allclose(matrix @ xx, xx @ matrix)

    def test_dissipator_allows_dephasing_only(self):
        self.assertEqual(allowed_pauli_labels('dissipator'), ['Z'])

    def test_signed_mixture_is_seeded(self):
        gate = two_by_two_schedule()[0]
        first = NoiseModel('random-pauli', signed=True, seed=5).generator_for(gate)
        second = NoiseModel('random-pauli', signed=True, seed=5).generator_for(gate)
        np.testing.assert_array_equal(first.matrix, second.matrix)
        self.assertFalse(NoiseModel('random-pauli', signed=True).physical)

    def test_invalid_models_rejected(self):
        with self.assertRaises(ValidationError):
            NoiseModel('amplitude-damping')
        with self.assertRaises(ValidationError):
            NoiseModel('depolarizing', signed=True)


class AttachNoiseTest(SimpleTestCase):

    def test_overrides_win(self):
        schedule = attach_noise(two_by_two_schedule(), NoiseModel(), 0.01, {3: 0.05})
        self.assertEqual(schedule[3].r, 0.05)
        self.assertTrue(all(gate.r == 0.01 for gate in schedule if gate.index != 3))

    def test_noisy_generator_adds_scaled_noise(self):
        gate = attach_noise(two_by_two_schedule(), NoiseModel(), 0.02)[-1]
        expected = gate.ideal.matrix + 0.02 * depolarizing_generator((0,)).matrix
        np.testing.assert_allclose(gate.generator().matrix, expected, atol=1e-14)

    def test_unknown_override_rejected(self):
        with self.assertRaises(ValidationError):
            attach_noise(two_by_two_schedule(), NoiseModel(), 0.01, {99: 0.1})

    def test_negative_strength_rejected(self):
        with self.assertRaises(ValidationError):
            attach_noise(two_by_two_schedule(), NoiseModel(), -0.01)


class TwirlingTest(SimpleTestCase):
    """
    Pauli twirling and quasi-probability boosting of small channels.
    """

    def test_twirl_keeps_pauli_channels(self):
        channel = PauliChannel({'I': 0.9, 'X': 0.05, 'Y': 0.0, 'Z': 0.05})
        twirled = pauli_twirl(channel.superop())
        for label, p in channel.probabilities.items():
            with self.subTest(label=label):
                self.assertAlmostEqual(twirled.probability(label), p, places=10)

    def test_twirl_keeps_transfer_diagonal(self):
        damping = dissipator_superop(SIGMA_MINUS).exp(0.3)
        twirled = pauli_twirl(damping)
        np.testing.assert_allclose(
            twirled.transfer_diagonal(), np.diag(pauli_transfer_matrix(damping)).real, atol=1e-12
        )
        self.assertAlmostEqual(sum(twirled.probabilities.values()), 1.0, places=12)
        self.assertAlmostEqual(twirled.probability('X'), twirled.probability('Y'), places=12)

    def test_twirl_rejects_non_channels(self):
        with self.assertRaises(ChannelNotCPTPError):
            pauli_twirl(SuperOp.identity(2) * 2.0)

    def test_boost_to_depolarizing_target(self):
        channel = PauliChannel({'I': 0.95, 'Z': 0.05})
        target = depolarizing_target(channel)
        self.assertAlmostEqual(target.error_probability(), 0.15, places=12)
        scheme = boost_error(channel, target)
        self.assertTrue(scheme.is_physical)
        self.assertAlmostEqual(scheme.weights['X'], 0.05, places=10)
        self.assertAlmostEqual(scheme.weights['Z'], 1 / 180, places=10)
        composed = scheme.superop() @ channel.superop()
        np.testing.assert_allclose(composed.matrix, target.superop().matrix, atol=1e-12)

    def test_identity_boost(self):
        channel = depolarizing_pauli_channel(0.1, 2)
        scheme = boost_error(channel, channel)
        self.assertAlmostEqual(scheme.weights['II'], 1.0, places=10)
        self.assertAlmostEqual(scheme.one_norm, 1.0, places=10)

    def test_inverting_noise_needs_signed_weights(self):
        channel = depolarizing_pauli_channel(0.1, 1)
        ideal = PauliChannel({'I': 1.0})
        scheme = boost_error(channel, ideal)
        self.assertFalse(scheme.is_physical)
        self.assertGreater(scheme.sampling_overhead(), 1.0)
        composed = scheme.superop() @ channel.superop()
        np.testing.assert_allclose(composed.matrix, np.eye(4), atol=1e-12)

    def test_singular_channel_rejected(self):
        fully_dephasing = PauliChannel({'I': 0.5, 'Z': 0.5})
        with self.assertRaises(SingularChannelError):
            boost_error(fully_dephasing, depolarizing_target(fully_dephasing))

    def test_invalid_weights_rejected(self):
        with self.assertRaises(ValidationError):
            PauliChannel({'I': 0.8, 'X': 0.1})
        with self.assertRaises(ValidationError):
            PauliChannel({'I': 1.1, 'X': -0.1})
        with self.assertRaises(ValidationError):
            QuasiProbabilityScheme({'I': 0.5, 'XX': 0.5})

    def test_dephasing_kraus_matches_pauli_channel(self):
        Z = PAULI_MATRICES['Z']
        kraus = kraus_superop([np.sqrt(0.8) * np.eye(2), np.sqrt(0.2) * Z])
        channel = PauliChannel({'I': 0.8, 'Z': 0.2})
        np.testing.assert_allclose(kraus.matrix, channel.superop().matrix, atol=1e-12)
        np.testing.assert_allclose(conjugation_superop(Z).matrix @ conjugation_superop(Z).matrix, np.eye(4))
