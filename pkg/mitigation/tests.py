import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from evolution.trotter import (
    EvolutionConfig,
    TimeSeries,
    effective_lindbladian,
    noisy_schedule,
    random_initial_state,
    record_trajectory,
    step_superoperator,
)
from hilbert.exceptions import FitQualityError, RankCollapseError
from hilbert.operators import PAULI_MATRICES, embed_local
from meanfield.phase import sweep
from noise.generators import NoiseModel
from spectral.decomposition import spectrum, steady_state_of_channel
from xyz_model.lattice import QubitLattice
from xyz_model.model import ModelSpec, build_xyz
from xyz_model.observables import average_pauli_operator, magnetization, maximally_mixed_state

from .pencil import ExponentialMode, ExponentialModel, extrapolate_spectrum, matrix_pencil, synthesize
from .richardson import NoisyObservations, boost_factors, extrapolate_to_zero, richardson
from .scaling import fit_scaling, power_law, scaling_extrapolate, select_ansatz

DEPOLARIZING = NoiseModel('depolarizing')
NOISELESS_G_CRI = 0.0695312


def paramagnet_instability(r, jx=0.9, jz=1.0, coordination=4):
    """Closed-form critical g of the depolarized mean-field paramagnet."""
    u = (3 * coordination + 1) * r
    sz = 1.0 / (1.0 + u)
    jy = jz + ((0.5 + u) / (2 * coordination * sz)) ** 2 / (jz - jx)
    return 0.5 * (jy - jx)


def uniform_series(values, dt):
    values = np.asarray(values)
    return TimeSeries(np.arange(values.size) * dt, values)


class RichardsonTest(SimpleTestCase):

    def test_linear_data_is_exact(self):
        observations = NoisyObservations((0.01, 0.02), (1.03, 1.06))
        result = richardson(observations)
        self.assertAlmostEqual(result.estimate, 1.0, places=12)
        self.assertAlmostEqual(result.residual, 0.0, places=12)

    def test_constant_data(self):
        observations = NoisyObservations.from_boosts(0.01, (1.0, 1.5, 2.0), (0.4, 0.4, 0.4))
        for order in (1, 2):
            with self.subTest(order=order):
                self.assertAlmostEqual(richardson(observations, order).estimate, 0.4, places=12)

    def test_quadratic_data_needs_second_order(self):
        rs = np.array([0.01, 0.015, 0.02])
        values = 2.0 - rs + 5.0 * rs ** 2
        observations = NoisyObservations(tuple(rs), tuple(values))
        self.assertAlmostEqual(richardson(observations, 2).estimate, 2.0, places=10)
        self.assertNotAlmostEqual(richardson(observations, 1).estimate, 2.0, places=6)

    def test_two_point_formula(self):
        c, r0, m1, m2 = 2.0, 0.01, 0.71, 0.74
        observations = NoisyObservations((r0, c * r0), (m1, m2))
        self.assertAlmostEqual(richardson(observations).estimate, (c * m1 - m2) / (c - 1), places=12)

    def test_observations_are_sorted(self):
        observations = NoisyObservations((0.02, 0.01), (2.0, 1.0), {'label': 'M'})
        self.assertEqual(observations.rs, (0.01, 0.02))
        self.assertEqual(observations.values, (1.0, 2.0))
        self.assertEqual(len(observations), 2)

    def test_complex_extrapolation(self):
        rs = [0.01, 0.02]
        values = [-0.5 + 1j - 0.01 * (2 + 1j), -0.5 + 1j - 0.02 * (2 + 1j)]
        self.assertAlmostEqual(extrapolate_to_zero(rs, values), -0.5 + 1j, places=12)

    def test_invalid_input_rejected(self):
        with self.assertRaises(ValidationError):
            richardson(NoisyObservations((0.01, 0.02), (1.0, 1.1)), order=2)
        with self.assertRaises(ValidationError):
            richardson(NoisyObservations((0.01, 0.02), (1.0, 1.1)), order=3)
        with self.assertRaises(ValidationError):
            NoisyObservations((0.01, 0.01), (1.0, 1.1))
        with self.assertRaises(ValidationError):
            NoisyObservations((0.0, 0.01), (1.0, 1.1))
        with self.assertRaises(ValidationError):
            NoisyObservations((0.01, 0.02), (1.0,))

    def test_default_boost_factors(self):
        self.assertEqual(boost_factors(), (1.0, 1.5, 2.0))


class LatticeRichardsonTest(SimpleTestCase):
    """
    Zero-noise extrapolation of the 2 x 2 steady-state magnetization.
    """

    def magnetization_at(self, spec, r):
        schedule, _ = build_xyz(spec)
        cfg = EvolutionConfig(tau=0.01, r=r)
        channel = step_superoperator(noisy_schedule(schedule, DEPOLARIZING, cfg), cfg)
        return magnetization(steady_state_of_channel(channel), spec.lattice)

    def test_error_reduction(self):
        r0 = 0.01
        for g in (0.025, 0.25):
            with self.subTest(g=g):
                spec = ModelSpec(QubitLattice(2)).with_g(g)
                reference = self.magnetization_at(spec, 0.0)
                factors = boost_factors()
                values = [self.magnetization_at(spec, c * r0) for c in factors]
                observations = NoisyObservations.from_boosts(r0, factors, values, g=g)
                estimate = richardson(observations, order=2).estimate
                raw_error = abs(values[0] - reference)
                self.assertGreater(raw_error, 0.0)
                self.assertLess(5 * abs(estimate - reference), raw_error)


class ScalingFitTest(SimpleTestCase):

    def setUp(self):
        self.x = np.linspace(0.05, 0.2, 151)

    def test_plain_power_law_is_recovered(self):
        m = power_law(self.x, 0.1, 0.8, 0.5)
        fit = fit_scaling(self.x, m, window=(0.005, 0.05))
        self.assertAlmostEqual(fit.critical, 0.1, delta=1e-6)
        self.assertAlmostEqual(fit.beta, 0.5, delta=1e-4)
        self.assertAlmostEqual(fit.amplitude, 0.8, delta=1e-3)
        self.assertEqual(fit.side, 1)
        self.assertLess(fit.residual, 1e-6)

    def test_ordered_side_below_critical_point(self):
        m = power_law(self.x, 0.15, 1.2, 0.4, side=-1)
        fit = fit_scaling(self.x, m, window=(0.005, 0.05))
        self.assertEqual(fit.side, -1)
        self.assertAlmostEqual(fit.critical, 0.15, delta=1e-6)
        self.assertAlmostEqual(fit.beta, 0.4, delta=1e-4)

    def test_modified_ansatz_absorbs_background(self):
        m = power_law(self.x, 0.1, 0.8, 0.5) + 0.01 + 0.05 * self.x
        fit = fit_scaling(self.x, m, window=(0.005, 0.05), ansatz='modified')
        self.assertAlmostEqual(fit.critical, 0.1, delta=2e-3)
        self.assertAlmostEqual(fit.beta, 0.5, delta=0.05)
        np.testing.assert_allclose(fit.predict(self.x[60:100]), m[60:100], rtol=0.02)

    def test_modified_background_is_linear_in_swept_parameter(self):
        m = power_law(self.x, 0.1, 0.8, 0.5) + 0.01 + 0.5 * self.x
        fit = fit_scaling(self.x, m, window=(0.005, 0.05), ansatz='modified')
        self.assertAlmostEqual(fit.slope, 0.5, delta=0.05)
        self.assertAlmostEqual(fit.offset + fit.slope * 0.08, 0.05, delta=2e-3)
        record = fit.as_record()
        self.assertEqual((record['offset'], record['slope']), (fit.offset, fit.slope))

    def test_poor_fit_rejected(self):
        m = np.where(self.x > 0.1, 0.5 + 0.45 * np.sin(400 * self.x), 0.0)
        with self.assertRaises(FitQualityError):
            fit_scaling(self.x, m, window=(0.005, 0.05))

    def test_curve_without_transition_rejected(self):
        with self.assertRaises(ValidationError):
            fit_scaling(self.x, np.full(self.x.size, 0.3))
        with self.assertRaises(ValidationError):
            fit_scaling(self.x, np.zeros(self.x.size))

    def test_sparse_window_rejected(self):
        x = np.linspace(0.0, 0.2, 5)
        with self.assertRaises(ValidationError):
            fit_scaling(x, power_law(x, 0.1, 1.0, 0.5), window=(0.005, 0.05))

    def test_unknown_ansatz_rejected(self):
        with self.assertRaises(ValidationError):
            fit_scaling(self.x, power_law(self.x, 0.1, 1.0, 0.5), ansatz='logarithmic')


class MeanFieldScalingTest(SimpleTestCase):
    """
    Critical-point extrapolation on depolarized mean-field g-sweeps.
    """

    window = (0.002, 0.02)
    noise_strengths = (0.005, 0.0075, 0.01, 0.015, 0.02, 0.03, 0.04)

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        spec = ModelSpec(QubitLattice(3), jx=0.9, jz=1.0)
        cls.curves = {}
        for r in cls.noise_strengths:
            centre = paramagnet_instability(r)
            grid = np.arange(centre - 0.006, centre + 0.0241, 0.001)
            cls.curves[r] = sweep('g', grid, spec, DEPOLARIZING, fixed=r, coordination=4)

    def extrapolate(self, r0, order):
        curves = [self.curves[round(c * r0, 6)] for c in boost_factors()]
        return scaling_extrapolate(curves, order=order, window=self.window)

    def test_fitted_critical_points_follow_instability(self):
        for r in (0.01, 0.03):
            curve = self.curves[r]
            self.assertEqual(select_ansatz(curve), 'plain')
            fit = fit_scaling(curve.values, curve.order_parameters, window=self.window, r=r)
            with self.subTest(r=r):
                self.assertAlmostEqual(fit.critical, paramagnet_instability(r), delta=2e-3)
                self.assertAlmostEqual(fit.beta, 0.5, delta=0.15)

    def test_quadratic_extrapolation(self):
        result = self.extrapolate(0.01, order=2)
        self.assertLess(abs(result.critical - NOISELESS_G_CRI), 0.1 * NOISELESS_G_CRI)
        self.assertEqual(len(result.fits), 3)
        self.assertEqual([fit.r for fit in result.fits], [0.01, 0.015, 0.02])

    def test_linear_extrapolation_at_small_noise(self):
        result = self.extrapolate(0.005, order=1)
        self.assertLess(abs(result.critical - NOISELESS_G_CRI), 0.1 * NOISELESS_G_CRI)

    def test_quadratic_beats_linear_at_larger_noise(self):
        linear = self.extrapolate(0.02, order=1)
        quadratic = self.extrapolate(0.02, order=2)
        self.assertLessEqual(
            abs(quadratic.critical - NOISELESS_G_CRI), abs(linear.critical - NOISELESS_G_CRI)
        )

    def test_critical_point_grows_with_noise(self):
        fits = [fit_scaling(self.curves[r].values, self.curves[r].order_parameters, window=self.window)
                for r in (0.01, 0.02, 0.04)]
        self.assertTrue(np.all(np.diff([fit.critical for fit in fits]) > 0))

    def test_r_sweeps_rejected(self):
        spec = ModelSpec(QubitLattice(3))
        curve = sweep('r', [0.0, 0.01], spec, DEPOLARIZING, fixed=0.1, coordination=4)
        with self.assertRaises(ValidationError):
            scaling_extrapolate([curve])


class MatrixPencilTest(SimpleTestCase):
    """
    Exponential fits of synthetic and simulated series.
    """

    def test_single_decay(self):
        series = uniform_series(2.0 * np.exp(-0.5 * np.arange(100) * 0.1), 0.1)
        model = matrix_pencil(series)
        self.assertEqual(model.count, 1)
        self.assertAlmostEqual(model.modes[0].rate.real, -0.5, delta=1e-10)
        self.assertAlmostEqual(model.modes[0].rate.imag, 0.0, delta=1e-10)
        self.assertAlmostEqual(model.modes[0].amplitude, 2.0, delta=1e-9)
        self.assertLess(model.residual, 1e-10)

    def test_real_and_oscillating_modes(self):
        t = np.arange(200) * 0.05
        values = 1.5 * np.exp(-0.3 * t) + 0.8 * np.exp(-t) * np.cos(0.7 * t + 0.4)
        model = matrix_pencil(uniform_series(values, 0.05))
        self.assertEqual(model.count, 3)
        rates = model.rates
        for expected in (-0.3, -1.0 + 0.7j, -1.0 - 0.7j):
            with self.subTest(rate=expected):
                self.assertLess(np.min(np.abs(rates - expected)), 1e-6)
        np.testing.assert_allclose(synthesize(model, t), values, atol=1e-8)

    def test_simulated_pure_decay(self):
        lattice = QubitLattice(1)
        schedule, _ = build_xyz(ModelSpec(lattice, jx=0.0, jy=0.0, jz=0.0))
        cfg = EvolutionConfig(tau=0.01, max_time=10.0, record_stride=10)
        series = record_trajectory(
            maximally_mixed_state(lattice), schedule, cfg, average_pauli_operator(lattice, 'z'),
            stop_at_steady=False,
        )
        model = matrix_pencil(series)
        self.assertEqual(model.count, 2)
        np.testing.assert_allclose(model.rates, [0.0, -1.0], atol=1e-8)
        self.assertAlmostEqual(model.modes[0].amplitude, 1.0, delta=1e-8)
        self.assertAlmostEqual(model.modes[0].phase, np.pi, delta=1e-8)

    def test_too_many_modes_requested(self):
        series = uniform_series(np.exp(-0.2 * np.arange(30)), 1.0)
        with self.assertRaises(RankCollapseError):
            matrix_pencil(series, p=3)
        with self.assertRaises(RankCollapseError):
            matrix_pencil(uniform_series([1.0, 0.5, 0.25], 1.0), p=2)

    def test_zero_series_rejected(self):
        with self.assertRaises(RankCollapseError):
            matrix_pencil(uniform_series(np.zeros(30), 1.0))

    def test_aliasing_flagged(self):
        t = np.arange(60.0)
        series = uniform_series(np.exp((-0.1 + 2.9j) * t), 1.0)
        with self.assertLogs('mitigation.pencil', level='WARNING'):
            model = matrix_pencil(series)
        self.assertTrue(model.aliased)

    def test_growing_modes_dropped(self):
        t = np.arange(80) * 0.1
        series = uniform_series(np.exp(0.2 * t) + np.exp(-0.5 * t), 0.1)
        with self.assertLogs('mitigation.pencil', level='WARNING'):
            model = matrix_pencil(series)
        self.assertTrue(np.all(model.rates.real <= 1e-8))

    def test_record_layout(self):
        model = ExponentialModel((ExponentialMode(1.0, 0.0, complex(-0.5, 0.0)),), dt=0.1)
        record = model.as_record()
        self.assertEqual(record['modes'][0]['rate'], [-0.5, 0.0])
        self.assertFalse(record['aliased'])


class SpectrumExtrapolationTest(SimpleTestCase):

    def setUp(self):
        self.exact = np.array([0.0, -0.5 + 1j, -0.5 - 1j, -2.0])

    def test_identical_spectra_unchanged(self):
        result = extrapolate_spectrum([self.exact, self.exact], [0.01, 0.02])
        np.testing.assert_allclose(result.eigenvalues, self.exact, atol=1e-12)
        self.assertEqual(result.clipped, [])

    def test_linear_drift_is_removed(self):
        drift = np.array([0.0, -3.0 - 0.5j, -3.0 + 0.5j, -1.0])
        rs = [0.03, 0.01, 0.02]
        models = [self.exact + r * drift for r in rs]
        result = extrapolate_spectrum(models, rs)
        self.assertEqual(result.rs, (0.01, 0.02, 0.03))
        np.testing.assert_allclose(result.eigenvalues, self.exact, atol=1e-10)
        self.assertEqual(len(result.tracks), 4)

    def test_positive_real_parts_clipped(self):
        models = [np.array([-0.001, -1.0]), np.array([-0.003, -1.0])]
        with self.assertLogs('mitigation.pencil', level='WARNING'):
            result = extrapolate_spectrum(models, [0.01, 0.02])
        self.assertEqual(result.clipped, [0])
        self.assertEqual(result.eigenvalues[0], 0.0)

    def test_unmatched_modes_reported(self):
        models = [np.array([0.0, -1.0]), np.array([0.0, -9.0])]
        result = extrapolate_spectrum(models, [0.01, 0.02], radius=0.5)
        np.testing.assert_allclose(result.eigenvalues, [0.0])
        self.assertEqual(result.unmatched[0.02], [-9.0])
        self.assertEqual(result.unmatched[0.01], [-1.0])

    def test_mismatched_inputs_rejected(self):
        with self.assertRaises(ValidationError):
            extrapolate_spectrum([self.exact], [0.01, 0.02])
        with self.assertRaises(ValidationError):
            extrapolate_spectrum([self.exact, self.exact], [0.01, 0.01])


class SpectroscopyTest(SimpleTestCase):
    """
    Liouvillian gap of the 2 x 2 model read off noisy trajectories.
    """

    def test_gap_mode_recovered(self):
        lattice = QubitLattice(2)
        spec = ModelSpec(lattice).with_g(0.1)
        schedule, _ = build_xyz(spec)
        observable = embed_local(PAULI_MATRICES['X'] + PAULI_MATRICES['Z'], (0,), lattice)
        rho = random_initial_state(lattice, seed=12)

        reference_cfg = EvolutionConfig(tau=0.01)
        exact = spectrum(effective_lindbladian(schedule, reference_cfg)).eigenvalues
        gap = exact[1]

        rs = (0.01, 0.02)
        models = []
        for r in rs:
            cfg = EvolutionConfig(tau=0.01, r=r, max_time=40.0, record_stride=5)
            series = record_trajectory(
                rho, noisy_schedule(schedule, DEPOLARIZING, cfg), cfg, observable, stop_at_steady=False
            )
            models.append(matrix_pencil(series))

        result = extrapolate_spectrum(models, rs)
        extrapolated = result.eigenvalues[np.argmin(np.abs(result.eigenvalues - gap))]
        noisy = models[0].rates[np.argmin(np.abs(models[0].rates - gap))]
        self.assertLess(abs(extrapolated.real - gap.real), 0.05 * abs(gap.real))
        self.assertLess(abs(extrapolated - gap), abs(noisy - gap))
