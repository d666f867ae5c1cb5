"""
The dissipative XYZ model and its grouped Trotter gate schedule.

    H = sum_<ij> (Jx sx_i sx_j + Jy sy_i sy_j + Jz sz_i sz_j)
    D_i = gamma (s-_i . s+_i - 1/2 {s+_i s-_i, .})

Gates are ordered as all column bonds (x, then y, then z axis), all row
bonds in the same axis order, then one dissipator per site. Within a block
bonds follow the lattice's row-major order.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable, NamedTuple

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

from hilbert.operators import PAULI_MATRICES, SIGMA_MINUS, embed_local, kron_all
from hilbert.superoperators import (
    SuperOp,
    conjugation_superop,
    dissipator_superop,
    embed_superoperator,
    hamiltonian_superop,
    lindbladian_matrix,
)

from .lattice import QubitLattice

logger = logging.getLogger(__name__)

AXES = ('x', 'y', 'z')
GATE_GROUPS = ('column', 'row', 'dissipation')
DENSE_QUBIT_LIMIT = 6


def _defaults():
    return getattr(settings, 'SIMULATION_DEFAULTS', {})


@dataclass(frozen=True)
class ModelSpec:
    """
    Couplings and lattice of one dissipative XYZ instance, in units of gamma.
    """

    lattice: QubitLattice
    jx: float = 0.9
    jy: float = 0.9
    jz: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        for name in ('jx', 'jy', 'jz', 'gamma'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f'{name} must be finite, got {value}.')
        if self.gamma <= 0:
            raise ValidationError(f'gamma must be positive, got {self.gamma}.')

    @property
    def g(self):
        """Dimensionless anisotropy |Jx - Jy| / (2 gamma)."""
        return abs(self.jx - self.jy) / (2 * self.gamma)

    def coupling(self, axis):
        return {'x': self.jx, 'y': self.jy, 'z': self.jz}[axis]

    def with_g(self, g):
        """Same model with Jy = Jx + 2 g gamma."""
        return replace(self, jy=self.jx + 2 * g * self.gamma)

    @classmethod
    def from_settings(cls, size, g=0.0, boundary=None, jx=None, jz=None):
        defaults = _defaults()
        gamma = defaults.get('GAMMA', 1.0)
        jx = defaults.get('JX', 0.9) if jx is None else jx
        lattice = QubitLattice(size, boundary or defaults.get('BOUNDARY', 'open'))
        return cls(
            lattice=lattice,
            jx=jx,
            jy=jx + 2 * g * gamma,
            jz=defaults.get('JZ', 1.0) if jz is None else jz,
            gamma=gamma,
        )


@dataclass(frozen=True, eq=False)
class GateGenerator:
    """
    One Trotter factor G = G_id + r E on its one- or two-site support.

    ``noise`` is any object exposing ``generator_for(gate)``; without one
    the gate is ideal.
    """

    index: int
    kind: str
    sites: tuple
    group: str
    ideal: SuperOp
    axis: str = None
    noise: object = field(default=None, repr=False)
    r: float = 0.0

    @property
    def label(self):
        if self.kind == 'bond':
            return f'{self.group}-{self.axis}{self.axis}{self.sites}'
        return f'dissipator{self.sites}'

    @property
    def n_sites(self):
        return len(self.sites)

    def with_noise(self, noise, r):
        if r < 0:
            raise ValidationError(f'Noise strength must be non-negative, got {r}.')
        return replace(self, noise=noise, r=float(r))

    def noise_generator(self):
        """Unscaled E on the gate support (zero without a noise model)."""
        if self.noise is None:
            return SuperOp.zero(2 ** self.n_sites)
        return self.noise.generator_for(self)

    def generator(self):
        return self.ideal + self.r * self.noise_generator()


class ModelBuild(NamedTuple):
    schedule: tuple
    exact_lindbladian: Callable


def bond_generator(coupling, axis):
    pauli = PAULI_MATRICES[axis.upper()]
    return hamiltonian_superop(coupling * np.kron(pauli, pauli))


def decay_generator(gamma):
    return dissipator_superop(SIGMA_MINUS, gamma)


def build_schedule(spec):
    lattice = spec.lattice
    gates = []
    for group, bonds in (('column', lattice.column_bonds), ('row', lattice.row_bonds)):
        for axis in AXES:
            ideal = bond_generator(spec.coupling(axis), axis)
            for bond in bonds:
                gates.append(GateGenerator(len(gates), 'bond', bond, group, ideal, axis=axis))
    decay = decay_generator(spec.gamma)
    for site in range(lattice.n_sites):
        gates.append(GateGenerator(len(gates), 'dissipator', (site,), 'dissipation', decay))
    return tuple(gates)


def build_xyz(spec):
    """
    Build the gate schedule and a builder for the exact Lindbladian.

    Returns:
        ModelBuild: (schedule, exact_lindbladian) where exact_lindbladian()
        forms the dense generator on lattices of at most DENSE_QUBIT_LIMIT qubits
    """
    schedule = build_schedule(spec)
    logger.debug(
        f'Built XYZ schedule on {spec.lattice}: {len(schedule)} gates, g={spec.g:.4f}'
    )
    return ModelBuild(schedule, partial(full_lindbladian, spec))


def _require_dense(n_sites):
    if n_sites > DENSE_QUBIT_LIMIT:
        raise ValidationError(
            f'Dense superoperators are limited to {DENSE_QUBIT_LIMIT} qubits, got {n_sites}.'
        )


def hamiltonian(spec):
    lattice = spec.lattice
    dim = lattice.dim
    H = np.zeros((dim, dim), dtype=complex)
    for a, b in lattice.bonds:
        for axis in AXES:
            pauli = PAULI_MATRICES[axis.upper()]
            H += spec.coupling(axis) * embed_local(np.kron(pauli, pauli), (a, b), lattice).matrix
    return H


def full_lindbladian(spec):
    """Dense generator of the whole model, assembled independently of the schedule."""
    lattice = spec.lattice
    _require_dense(lattice.n_sites)
    jumps = [
        (embed_local(SIGMA_MINUS, (site,), lattice).matrix, spec.gamma)
        for site in range(lattice.n_sites)
    ]
    return lindbladian_matrix(hamiltonian(spec), jumps)


def schedule_generator_sum(schedule, n_sites, noisy=True):
    """Sum of the gate generators embedded in the full space."""
    _require_dense(n_sites)
    total = SuperOp.zero(2 ** n_sites)
    for gate in schedule:
        local = gate.generator() if noisy else gate.ideal
        total = total + embed_superoperator(local, gate.sites, n_sites)
    return total


def z2_superoperator(lattice):
    """Conjugation by the product of sigma^z over every site."""
    n_sites = getattr(lattice, 'n_sites', lattice)
    _require_dense(n_sites)
    return conjugation_superop(kron_all([PAULI_MATRICES['Z']] * n_sites))
