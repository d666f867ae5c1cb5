import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from scipy.linalg import expm

from hilbert.operators import PAULI_MATRICES, DensityMatrix, trace_distance
from hilbert.superoperators import embed_superoperator, hamiltonian_superop
from noise.generators import NoiseModel, attach_noise
from spectral.decomposition import steady_state_of_channel
from xyz_model.lattice import QubitLattice
from xyz_model.model import (
    GateGenerator,
    ModelSpec,
    build_xyz,
    decay_generator,
    schedule_generator_sum,
)
from xyz_model.observables import all_down_state, average_pauli_operator, maximally_mixed_state

from .magnus import (
    MeanFieldReduction,
    _bond_schedule,
    magnus_effective,
    mean_field_generator,
    mean_field_hamiltonian,
    occupation_weight,
    reduce_to_site,
)
from .trotter import (
    EvolutionConfig,
    TrotterPropagator,
    effective_lindbladian,
    evolve_to_steady,
    noisy_schedule,
    random_initial_state,
    record_trajectory,
    step_superoperator,
    trotter_step,
)


def single_bond_schedule(spec, noise=None, r=0.0):
    """One bond's three gates followed by a dissipator on each of its sites."""
    bonds = _bond_schedule(spec, noise, r)
    decay = decay_generator(spec.gamma)
    dissipators = tuple(
        GateGenerator(3 + site, 'dissipator', (site,), 'dissipation', decay)
        for site in (0, 1)
    )
    if noise is not None:
        dissipators = tuple(gate.with_noise(noise, r) for gate in dissipators)
    return bonds + dissipators


class EvolutionConfigTest(SimpleTestCase):

    def test_invalid_values_rejected(self):
        for kwargs in ({'tau': -0.1}, {'r': -1e-3}, {'tolerance': 0.0}, {'record_stride': 0}, {'max_time': 0.0}):
            with self.subTest(**kwargs):
                with self.assertRaises(ValidationError):
                    EvolutionConfig(**kwargs)

    def test_from_settings_overrides(self):
        cfg = EvolutionConfig.from_settings(tau=0.005, r=0.02, max_time=None)
        self.assertEqual(cfg.tau, 0.005)
        self.assertEqual(cfg.r, 0.02)
        self.assertEqual(cfg.max_steps, int(round(cfg.max_time / 0.005)))

    def test_zero_step_is_identity(self):
        schedule, _ = build_xyz(ModelSpec(QubitLattice(2)).with_g(0.1))
        rho = DensityMatrix.random(4, np.random.default_rng(11))
        out = trotter_step(rho, schedule, EvolutionConfig(tau=0.0))
        np.testing.assert_allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_zero_step_cannot_reach_steady_state(self):
        schedule, _ = build_xyz(ModelSpec(QubitLattice(1)))
        with self.assertRaises(ValidationError):
            evolve_to_steady(all_down_state(QubitLattice(1)), schedule, EvolutionConfig(tau=0.0))


class TrotterStepTest(SimpleTestCase):
    """
    Local-channel propagation against dense superoperators.
    """

    def setUp(self):
        self.spec = ModelSpec(QubitLattice(2)).with_g(0.25)
        self.schedule, self.exact = build_xyz(self.spec)

    def test_step_matches_dense_step(self):
        cfg = EvolutionConfig(tau=0.02, r=0.03)
        schedule = noisy_schedule(self.schedule, NoiseModel('depolarizing'), cfg)
        rho = DensityMatrix.random(4, np.random.default_rng(2))
        dense = step_superoperator(schedule, cfg).apply(rho)
        np.testing.assert_allclose(trotter_step(rho, schedule, cfg).matrix, dense, atol=1e-12)

    def test_trotter_error_is_second_order_per_step(self):
        generator = self.exact().matrix
        errors = []
        for tau in (0.02, 0.01):
            step = step_superoperator(self.schedule, EvolutionConfig(tau=tau)).matrix
            errors.append(np.linalg.norm(step - expm(tau * generator)))
        self.assertGreater(errors[0] / errors[1], 3.5)
        self.assertLess(errors[0] / errors[1], 4.5)

    def test_single_site_decay_is_exact(self):
        spec = ModelSpec(QubitLattice(1))
        schedule, exact = build_xyz(spec)
        step = step_superoperator(schedule, EvolutionConfig(tau=0.1))
        np.testing.assert_allclose(step.matrix, expm(0.1 * exact().matrix), atol=1e-12)

    def test_step_preserves_trace_with_noise(self):
        cfg = EvolutionConfig(tau=0.05, r=0.1)
        for kind in ('depolarizing', 'random-pauli', 'transverse-damping'):
            with self.subTest(kind=kind):
                schedule = noisy_schedule(self.schedule, NoiseModel(kind), cfg)
                out = trotter_step(maximally_mixed_state(self.spec.lattice), schedule, cfg)
                self.assertAlmostEqual(np.trace(out.matrix).real, 1.0, places=12)

    def test_trace_does_not_drift_over_many_steps(self):
        spec = ModelSpec(QubitLattice(2)).with_g(0.25)
        schedule = single_bond_schedule(spec, NoiseModel('depolarizing'), 0.02)
        propagator = TrotterPropagator(schedule, 0.01)
        out = propagator.step(random_initial_state(2, seed=7).matrix, 10_000)
        self.assertEqual(out.shape, (4, 4))
        self.assertLess(abs(np.trace(out).real - 1.0), 1e-9)
        self.assertLess(abs(np.trace(out).imag), 1e-9)

    def test_signed_noise_propagates_without_cptp_check(self):
        cfg = EvolutionConfig(tau=0.01, r=0.01)
        schedule = noisy_schedule(self.schedule, NoiseModel('random-pauli', signed=True, seed=3), cfg)
        propagator = TrotterPropagator(schedule, cfg.tau)
        self.assertTrue(all(not channel.check for channel in propagator.channels))

    def test_state_too_small_rejected(self):
        propagator = TrotterPropagator(self.schedule, 0.01)
        with self.assertRaises(ValidationError):
            propagator.step(DensityMatrix.maximally_mixed(2))


class SteadyStateTest(SimpleTestCase):

    def test_pure_decay_reaches_all_down(self):
        lattice = QubitLattice(1)
        schedule, _ = build_xyz(ModelSpec(lattice, jx=0.0, jy=0.0, jz=0.0))
        result = evolve_to_steady(maximally_mixed_state(lattice), schedule, EvolutionConfig(tau=0.01))
        self.assertTrue(result.converged)
        self.assertLess(trace_distance(result.rho.matrix, all_down_state(lattice).matrix), 1e-6)

    def test_agrees_with_fixed_point_of_step(self):
        spec = ModelSpec(QubitLattice(2)).with_g(0.25)
        schedule, _ = build_xyz(spec)
        cfg = EvolutionConfig(tau=0.01, r=0.01, max_time=200.0)
        schedule = noisy_schedule(schedule, NoiseModel('depolarizing'), cfg)
        result = evolve_to_steady(all_down_state(spec.lattice), schedule, cfg)
        self.assertTrue(result.converged)
        fixed_point = steady_state_of_channel(step_superoperator(schedule, cfg))
        self.assertLess(trace_distance(result.rho.matrix, fixed_point.matrix), 1e-5)

    def test_budget_exhaustion_is_reported(self):
        spec = ModelSpec(QubitLattice(2)).with_g(0.1)
        schedule, _ = build_xyz(spec)
        cfg = EvolutionConfig(tau=0.01, max_time=0.5, probe_window=0.1)
        with self.assertLogs('evolution.trotter', level='WARNING'):
            result = evolve_to_steady(all_down_state(spec.lattice), schedule, cfg)
        self.assertFalse(result.converged)
        self.assertEqual(result.steps, 50)


class TrajectoryTest(SimpleTestCase):

    def test_uniform_sampling(self):
        lattice = QubitLattice(2)
        schedule, _ = build_xyz(ModelSpec(lattice).with_g(0.1))
        cfg = EvolutionConfig(tau=0.01, max_time=2.0, record_stride=5)
        rho = random_initial_state(lattice, seed=4)
        series = record_trajectory(rho, schedule, cfg, average_pauli_operator(lattice, 'z'), stop_at_steady=False)
        self.assertEqual(len(series), 41)
        self.assertAlmostEqual(series.dt, 0.05, places=12)
        self.assertAlmostEqual(series.values[0], average_pauli_operator(lattice, 'z').expectation(rho).real)
        self.assertEqual(series.metadata['stride'], 5)

    def test_symmetric_state_keeps_zero_transverse_magnetization(self):
        lattice = QubitLattice(2)
        schedule, _ = build_xyz(ModelSpec(lattice).with_g(0.1))
        cfg = EvolutionConfig(tau=0.01, r=0.05, max_time=5.0, record_stride=10)
        schedule = noisy_schedule(schedule, NoiseModel('depolarizing'), cfg)
        series = record_trajectory(
            all_down_state(lattice), schedule, cfg, average_pauli_operator(lattice, 'x'), stop_at_steady=False
        )
        self.assertEqual(len(series), 51)
        self.assertLess(np.max(np.abs(series.values)), 1e-8)

    def test_random_initial_state_is_seeded(self):
        lattice = QubitLattice(2)
        first = random_initial_state(lattice, seed=9)
        second = random_initial_state(lattice, seed=9)
        np.testing.assert_array_equal(first.matrix, second.matrix)


class EffectiveLindbladianTest(SimpleTestCase):
    """
    Exact log of the step against the graded Magnus partial sums.
    """

    def setUp(self):
        self.spec = ModelSpec(QubitLattice(2)).with_g(0.2)
        self.noise = NoiseModel('depolarizing')

    def test_log_reproduces_step(self):
        cfg = EvolutionConfig(tau=0.02, r=0.02)
        schedule = single_bond_schedule(self.spec, self.noise, cfg.r)
        generator = effective_lindbladian(schedule, cfg)
        step = step_superoperator(schedule, cfg)
        np.testing.assert_allclose(expm(cfg.tau * generator.matrix), step.matrix, atol=1e-10)

    def test_magnus_partial_sums_converge(self):
        cfg = EvolutionConfig(tau=0.01, r=0.01)
        schedule = single_bond_schedule(self.spec, self.noise, cfg.r)
        exact = effective_lindbladian(schedule, cfg).matrix
        result = magnus_effective(schedule, cfg.tau, order=3)
        errors = [np.linalg.norm(result.partial_sum(k).matrix - exact) for k in range(4)]
        for lower, higher in zip(errors, errors[1:]):
            self.assertLess(higher, lower)
        self.assertLess(errors[3], 1e-2 * errors[0])

    def test_leading_term_is_generator_sum(self):
        schedule = single_bond_schedule(self.spec, self.noise, 0.05)
        result = magnus_effective(schedule, 0.01, order=1)
        ideal = schedule_generator_sum(schedule, 2, noisy=False)
        np.testing.assert_allclose(result.terms[0].matrix, ideal.matrix, atol=1e-12)
        for term in result.terms:
            self.assertTrue(term.is_trace_annihilating(1e-10))

    def test_noiseless_first_order_terms(self):
        schedule = single_bond_schedule(self.spec)
        result = magnus_effective(schedule, 0.01, order=1)
        second = magnus_effective(schedule, 0.02, order=1)
        np.testing.assert_allclose(second.terms[0].matrix, result.terms[0].matrix)
        np.testing.assert_allclose(second.terms[1].matrix, 2 * result.terms[1].matrix, atol=1e-12)

    def test_occupation_weight(self):
        self.assertEqual(occupation_weight((3, 2, 1)), 1)
        self.assertEqual(occupation_weight((2, 2, 1)), 2)
        self.assertEqual(occupation_weight((1, 1, 1, 1)), 24)

    def test_order_bounds(self):
        with self.assertRaises(ValidationError):
            magnus_effective(single_bond_schedule(self.spec), 0.01, order=4)


class MeanFieldReductionTest(SimpleTestCase):

    def setUp(self):
        self.spec = ModelSpec(QubitLattice(3)).with_g(0.1)

    def test_affine_in_mean_field(self):
        reduction = MeanFieldReduction(self.spec, NoiseModel('depolarizing'), 0.01)
        s, t = np.array([0.1, -0.2, -0.7]), np.array([0.3, 0.05, -0.4])
        combined = reduction.generator(0.5 * (s + t)).matrix
        average = 0.5 * (reduction.generator(s).matrix + reduction.generator(t).matrix)
        np.testing.assert_allclose(combined, average, atol=1e-12)

    def test_hamiltonian_part_matches_mean_field_hamiltonian(self):
        s = (0.2, -0.1, -0.5)
        generator = mean_field_generator(self.spec, s)
        decay = decay_generator(self.spec.gamma)
        expected = hamiltonian_superop(mean_field_hamiltonian(self.spec, s)) + decay
        np.testing.assert_allclose(generator.matrix, expected.matrix, atol=1e-12)

    def test_reduction_of_local_map(self):
        local = decay_generator(1.0)
        two_site = embed_superoperator(local, (0,), 2)
        partner = 0.5 * (PAULI_MATRICES['I'] + 0.3 * PAULI_MATRICES['X'])
        np.testing.assert_allclose(reduce_to_site(two_site, partner).matrix, local.matrix, atol=1e-12)

    def test_unsupported_magnus_order(self):
        with self.assertRaises(ValidationError):
            MeanFieldReduction(self.spec, magnus_order=3)

    def test_noise_is_attached_to_bonds(self):
        noisy = _bond_schedule(self.spec, NoiseModel('depolarizing'), 0.02)
        self.assertTrue(all(gate.r == 0.02 for gate in noisy))
        plain = attach_noise(_bond_schedule(self.spec, None, 0.0), NoiseModel('depolarizing'), 0.02)
        np.testing.assert_allclose(noisy[0].generator().matrix, plain[0].generator().matrix)
