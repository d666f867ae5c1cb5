import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from noise.generators import NoiseModel
from xyz_model.lattice import QubitLattice
from xyz_model.model import ModelSpec

from .dynamics import (
    MeanFieldModel,
    mf_rhs,
    mf_spectrum,
    mf_steady,
)
from .phase import critical_point, is_ordered, sweep

DEPOLARIZING = NoiseModel('depolarizing')


def paramagnet_instability(r, jx=0.9, jz=1.0, coordination=4):
    """
    g at which the depolarized paramagnet loses stability.

    Around s = (0, 0, sz) with sz = -1 / (1 + u) and u = (3z + 1) r, the
    transverse block has eigenvalues -1/2 - u +- 2z |sz| sqrt((Jy - Jz)(Jz - Jx)).
    """
    u = (3 * coordination + 1) * r
    sz = 1.0 / (1.0 + u)
    jy = jz + ((0.5 + u) / (2 * coordination * sz)) ** 2 / (jz - jx)
    return 0.5 * (jy - jx)


def base_spec():
    return ModelSpec(QubitLattice(3), jx=0.9, jz=1.0)


class EquationsOfMotionTest(SimpleTestCase):
    """
    Closed-form right-hand side against direct application of L(s).
    """

    def setUp(self):
        self.rng = np.random.default_rng(17)

    def random_bloch(self):
        vector = self.rng.normal(size=3)
        return vector / np.linalg.norm(vector) * self.rng.uniform(0.1, 1.0)

    def test_rhs_matches_direct_evaluation(self):
        cases = [
            (None, 0.0, 1),
            (DEPOLARIZING, 0.02, 1),
            (NoiseModel('random-pauli'), 0.02, 1),
            (NoiseModel('transverse-damping'), 0.02, 1),
            (DEPOLARIZING, 0.02, 2),
        ]
        for noise, r, order in cases:
            model = MeanFieldModel(base_spec().with_g(0.15), noise, r, coordination=4, magnus_order=order)
            for _ in range(5):
                s = self.random_bloch()
                with self.subTest(noise=getattr(noise, 'kind', None), order=order, s=s):
                    np.testing.assert_allclose(model.rhs(s), model.rhs_direct(s), atol=1e-12)

    def test_jacobian_matches_finite_differences(self):
        model = MeanFieldModel(base_spec().with_g(0.1), DEPOLARIZING, 0.01, coordination=4)
        s = np.array([0.2, -0.1, -0.6])
        step = 1e-6
        columns = [
            (model.rhs(s + step * unit) - model.rhs(s - step * unit)) / (2 * step)
            for unit in np.eye(3)
        ]
        np.testing.assert_allclose(model.jacobian(s), np.array(columns).T, atol=1e-7)

    def test_uncoupled_decay(self):
        spec = ModelSpec(QubitLattice(3), jx=0.0, jy=0.0, jz=0.0)
        np.testing.assert_allclose(
            mf_rhs((0.3, 0.2, 0.1), spec, coordination=4), (-0.15, -0.1, -1.1), atol=1e-12
        )

    def test_all_down_is_stationary(self):
        for g in (0.0, 0.1, 0.3):
            with self.subTest(g=g):
                np.testing.assert_allclose(
                    mf_rhs((0.0, 0.0, -1.0), base_spec().with_g(g), coordination=4), 0.0, atol=1e-12
                )

    def test_depolarizing_contracts_every_component(self):
        spec = base_spec().with_g(0.1)
        for _ in range(5):
            s = self.random_bloch()
            with self.subTest(s=s):
                noisy = mf_rhs(s, spec, DEPOLARIZING, 0.01, coordination=4)
                clean = mf_rhs(s, spec, coordination=4)
                np.testing.assert_allclose(noisy - clean, -13 * 0.01 * s, atol=1e-12)

    def test_z2_equivariance(self):
        model = MeanFieldModel(base_spec().with_g(0.12), NoiseModel('random-pauli'), 0.01, coordination=4)
        flip = np.diag([-1.0, -1.0, 1.0])
        for _ in range(5):
            s = self.random_bloch()
            with self.subTest(s=s):
                np.testing.assert_allclose(model.rhs(flip @ s), flip @ model.rhs(s), atol=1e-12)

    def test_transverse_damping_breaks_z2(self):
        model = MeanFieldModel(base_spec().with_g(0.12), NoiseModel('transverse-damping'), 0.05, coordination=4)
        flip = np.diag([-1.0, -1.0, 1.0])
        s = np.array([0.2, 0.1, -0.5])
        self.assertGreater(np.linalg.norm(model.rhs(flip @ s) - flip @ model.rhs(s)), 1e-4)


class SteadyStateTest(SimpleTestCase):

    def test_isotropic_model_is_paramagnetic(self):
        state = mf_steady(0.0, 0.0, base_spec(), coordination=4)
        self.assertEqual(state.phase, 'PM')
        self.assertTrue(state.stable)
        np.testing.assert_allclose(state.s, (0.0, 0.0, -1.0), atol=1e-9)

    def test_anisotropic_model_is_ferromagnetic(self):
        state = mf_steady(0.1, 0.0, base_spec(), coordination=4)
        self.assertEqual(state.phase, 'FM')
        self.assertTrue(state.stable)
        self.assertTrue(state.converged)
        self.assertLess(state.bloch_norm, 1.0 + 1e-8)
        mirrored = (-state.sx, -state.sy, state.sz)
        model = MeanFieldModel(base_spec().with_g(0.1), coordination=4)
        np.testing.assert_allclose(model.rhs(mirrored), 0.0, atol=1e-9)

    def test_depolarized_paramagnet(self):
        r = 0.05
        state = mf_steady(0.1, r, base_spec(), DEPOLARIZING, coordination=4)
        self.assertEqual(state.phase, 'PM')
        self.assertAlmostEqual(state.sz, -1.0 / (1.0 + 13 * r), places=9)

    def test_symmetric_seed_stays_symmetric(self):
        state = mf_steady(0.1, 0.0, base_spec(), seeds=[(0.0, 0.0, -0.99)], coordination=4)
        self.assertEqual(state.phase, 'PM')
        self.assertFalse(state.stable)
        self.assertTrue(is_ordered(state))

    def test_spectrum_of_paramagnet(self):
        spec = base_spec().with_g(0.0)
        state = mf_steady(0.0, 0.0, spec, coordination=4)
        generator_values, jacobian_values = mf_spectrum(state, spec, coordination=4)
        self.assertAlmostEqual(abs(generator_values[0]), 0.0, places=10)
        expected = sorted([-0.5 + 0.8j, -0.5 - 0.8j, -1.0], key=lambda v: (-v.real, -v.imag))
        self.assertEqual(len(jacobian_values), 3)
        for value in expected:
            self.assertLess(np.min(np.abs(jacobian_values - value)), 1e-9)
        self.assertAlmostEqual(jacobian_values[-1].real, -1.0, places=9)


class SweepTest(SimpleTestCase):
    """
    Phase curves along g and r with depolarizing and symmetry-breaking noise.
    """

    def test_g_sweep_finds_transition(self):
        curve = sweep('g', np.linspace(0.0, 0.2, 21), base_spec(), coordination=4)
        index = curve.transition_index()
        self.assertIsNotNone(index)
        self.assertAlmostEqual(curve.values[index], 0.07, places=9)
        self.assertEqual(curve.phases[0], 'PM')
        self.assertEqual(curve.phases[-1], 'FM')
        self.assertLess(curve.order_parameters[index], curve.order_parameters[-1])
        for state in curve.states:
            self.assertLessEqual(state.bloch_norm, 1.0 + 1e-8)

    def test_rows_carry_parameters(self):
        curve = sweep('r', [0.0, 0.01, 0.05], base_spec(), DEPOLARIZING, fixed=0.1, coordination=4)
        rows = curve.as_rows()
        self.assertEqual([row['r'] for row in rows], [0.0, 0.01, 0.05])
        self.assertTrue(all(row['g'] == 0.1 for row in rows))
        self.assertEqual([row['phase'] for row in rows], ['FM', 'FM', 'PM'])
        self.assertIsNone(curve.r)

    def test_transverse_damping_leaves_no_paramagnet(self):
        noise = NoiseModel('transverse-damping')
        curve = sweep('g', [0.0, 0.05, 0.1, 0.2], base_spec(), noise, fixed=0.01, coordination=4)
        self.assertFalse(curve.symmetric_noise)
        self.assertTrue(np.all(curve.order_parameters > 1e-4))
        self.assertIsNone(curve.transition_index())

    def test_non_monotone_grid_rejected(self):
        with self.assertRaises(ValidationError):
            sweep('g', [0.0, 0.1, 0.05], base_spec())

    def test_unknown_axis_rejected(self):
        with self.assertRaises(ValidationError):
            sweep('jz', [0.0, 0.1], base_spec())


class CriticalPointTest(SimpleTestCase):

    def test_noiseless_critical_g(self):
        point = critical_point('g', base_spec(), (0.0, 0.2), refine=False, coordination=4)
        self.assertAlmostEqual(point.value, paramagnet_instability(0.0), delta=1e-6)
        self.assertAlmostEqual(point.value, 0.0695312, delta=1e-6)
        self.assertIsNone(point.beta)

    def test_critical_g_moves_up_with_noise(self):
        values = []
        for r in (0.0, 0.01, 0.02):
            point = critical_point('g', base_spec(), (0.0, 0.4), DEPOLARIZING, fixed=r,
                                   refine=False, coordination=4)
            with self.subTest(r=r):
                self.assertAlmostEqual(point.value, paramagnet_instability(r), delta=1e-6)
            values.append(point.value)
        self.assertTrue(np.all(np.diff(values) > 0))

    def test_critical_r_with_power_law_refinement(self):
        point = critical_point('r', base_spec(), (0.0, 0.1), DEPOLARIZING, fixed=0.1,
                               window=(1e-4, 1e-3), coordination=4)
        self.assertGreater(point.value, 0.005)
        self.assertLess(point.value, 0.1)
        self.assertAlmostEqual(point.bisection_value, 0.0137468, delta=1e-6)
        self.assertAlmostEqual(point.value, point.bisection_value, delta=5e-5)
        self.assertLess(point.fit.residual, 0.02)
        self.assertAlmostEqual(point.beta, 0.5, delta=0.1)
        self.assertEqual(point.fit.side, -1)

    def test_bracket_without_transition_rejected(self):
        with self.assertRaises(ValidationError):
            critical_point('g', base_spec(), (0.1, 0.2), coordination=4)

    def test_warm_start_matches_cold_start(self):
        grid = np.linspace(0.08, 0.12, 5)
        warm = sweep('g', grid, base_spec(), coordination=4)
        cold = sweep('g', grid, base_spec(), warm_start=False, coordination=4)
        np.testing.assert_allclose(warm.order_parameters, cold.order_parameters, atol=1e-8)
