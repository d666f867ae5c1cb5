import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from hilbert.operators import DensityMatrix
from spectral.decomposition import steady_state_exact

from .lattice import QubitLattice
from .model import (
    ModelSpec,
    build_xyz,
    full_lindbladian,
    schedule_generator_sum,
    z2_superoperator,
)
from .observables import (
    all_down_state,
    average_pauli_operator,
    average_spin,
    magnetization,
    maximally_mixed_state,
    order_parameter,
)


class QubitLatticeTest(SimpleTestCase):
    """
    Bond bookkeeping of open and periodic square lattices.
    """

    def test_open_bond_count(self):
        for size in (1, 2, 3, 4):
            with self.subTest(size=size):
                lattice = QubitLattice(size)
                self.assertEqual(len(lattice.bonds), 2 * size * (size - 1))
                self.assertEqual(len(set(lattice.bonds)), len(lattice.bonds))

    def test_periodic_bond_count(self):
        for size in (3, 4):
            with self.subTest(size=size):
                lattice = QubitLattice(size, 'periodic')
                self.assertEqual(len(lattice.bonds), 2 * size * size)
                undirected = {frozenset(bond) for bond in lattice.bonds}
                self.assertEqual(len(undirected), len(lattice.bonds))

    def test_row_major_ordering(self):
        lattice = QubitLattice(3)
        self.assertEqual(lattice.site_index(1, 2), 5)
        self.assertEqual(lattice.coordinates(7), (2, 1))
        self.assertEqual(lattice.column_bonds[0], (0, 3))
        self.assertEqual(lattice.row_bonds[0], (0, 1))
        self.assertEqual(lattice.neighbours(4), [1, 3, 5, 7])

    def test_invalid_lattices_rejected(self):
        for size, boundary in ((0, 'open'), (2, 'periodic'), (2, 'twisted')):
            with self.subTest(size=size, boundary=boundary):
                with self.assertRaises(ValidationError):
                    QubitLattice(size, boundary)


class ModelSpecTest(SimpleTestCase):

    def test_g_follows_couplings(self):
        spec = ModelSpec(QubitLattice(2), jx=0.9, jy=1.1)
        self.assertAlmostEqual(spec.g, 0.1, places=12)

    def test_with_g_keeps_convention(self):
        spec = ModelSpec(QubitLattice(3), jz=1.0)
        for g in (0.025, 0.1, 0.25):
            with self.subTest(g=g):
                shifted = spec.with_g(g)
                self.assertAlmostEqual(shifted.g, g, places=12)
                self.assertAlmostEqual(shifted.jy, shifted.jx + 2 * g, places=12)
                self.assertEqual(shifted.jz, 1.0)

    def test_from_settings_defaults(self):
        spec = ModelSpec.from_settings(2, g=0.1)
        self.assertEqual(spec.jx, 0.9)
        self.assertEqual(spec.jz, 1.0)
        self.assertEqual(spec.lattice.boundary, 'open')
        self.assertAlmostEqual(spec.g, 0.1, places=12)

    def test_non_finite_or_bad_rate_rejected(self):
        with self.assertRaises(ValidationError):
            ModelSpec(QubitLattice(1), jx=float('nan'))
        with self.assertRaises(ValidationError):
            ModelSpec(QubitLattice(1), gamma=0.0)


class BuildXYZTest(SimpleTestCase):
    """
    Gate schedule layout and agreement with the dense Lindbladian.
    """

    def test_single_site_schedule(self):
        schedule, _ = build_xyz(ModelSpec(QubitLattice(1)))
        self.assertEqual(len(schedule), 1)
        self.assertEqual(schedule[0].kind, 'dissipator')

    def test_two_by_two_counts_and_order(self):
        schedule, _ = build_xyz(ModelSpec(QubitLattice(2), jy=1.1))
        bonds = [gate for gate in schedule if gate.kind == 'bond']
        dissipators = [gate for gate in schedule if gate.kind == 'dissipator']
        self.assertEqual(len(bonds), 12)
        self.assertEqual(len(dissipators), 4)
        groups = [(gate.group, gate.axis) for gate in bonds]
        expected = [(group, axis) for group in ('column', 'row') for axis in 'xyz' for _ in range(2)]
        self.assertEqual(groups, expected)
        self.assertEqual([gate.index for gate in schedule], list(range(16)))
        self.assertTrue(all(gate.group == 'dissipation' for gate in schedule[12:]))

    def test_ideal_generators_are_trace_annihilating(self):
        schedule, _ = build_xyz(ModelSpec(QubitLattice(2), jy=1.3))
        for gate in schedule:
            with self.subTest(gate=gate.label):
                self.assertTrue(gate.ideal.is_trace_annihilating())

    def test_schedule_partitions_lindbladian(self):
        for size, jy in ((1, 0.9), (2, 0.95), (2, 1.4)):
            with self.subTest(size=size, jy=jy):
                spec = ModelSpec(QubitLattice(size), jy=jy)
                schedule, exact = build_xyz(spec)
                total = schedule_generator_sum(schedule, spec.lattice.n_sites)
                self.assertLess(np.max(np.abs(total.matrix - exact().matrix)), 1e-10)

    def test_z2_symmetry(self):
        spec = ModelSpec(QubitLattice(2), jy=1.2)
        generator = full_lindbladian(spec)
        parity = z2_superoperator(spec.lattice)
        self.assertLess(parity.commutator(generator).norm(), 1e-10)

    def test_dense_limit_enforced(self):
        with self.assertRaises(ValidationError):
            full_lindbladian(ModelSpec(QubitLattice(3)))


class ObservableTest(SimpleTestCase):

    def setUp(self):
        self.lattice = QubitLattice(2)

    def test_all_down_state(self):
        rho = all_down_state(self.lattice)
        self.assertAlmostEqual(magnetization(rho, self.lattice), -1.0, places=12)
        self.assertAlmostEqual(order_parameter(rho, self.lattice), 0.0, places=12)

    def test_maximally_mixed_state(self):
        rho = maximally_mixed_state(self.lattice)
        self.assertAlmostEqual(magnetization(rho, self.lattice), 0.0, places=12)
        self.assertAlmostEqual(order_parameter(rho, self.lattice), 0.0, places=12)

    def test_average_operator_matches_partial_traces(self):
        rho = DensityMatrix.random(4, np.random.default_rng(3))
        for axis in 'xyz':
            with self.subTest(axis=axis):
                operator = average_pauli_operator(self.lattice, axis)
                direct = operator.expectation(rho).real
                self.assertAlmostEqual(direct, average_spin(rho, self.lattice, axis), places=10)

    def test_wrong_dimension_rejected(self):
        with self.assertRaises(ValidationError):
            magnetization(DensityMatrix.maximally_mixed(3), self.lattice)

    def test_pure_decay_steady_state(self):
        spec = ModelSpec(QubitLattice(2), jx=0.0, jy=0.0, jz=0.0)
        rho = steady_state_exact(full_lindbladian(spec))
        self.assertAlmostEqual(magnetization(rho, spec.lattice), -1.0, places=8)

    def test_symmetric_steady_state_has_no_order(self):
        spec = ModelSpec(QubitLattice(2)).with_g(0.025)
        rho = steady_state_exact(full_lindbladian(spec))
        self.assertLess(abs(order_parameter(rho, spec.lattice)), 1e-8)
