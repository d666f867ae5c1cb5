"""
Lattice-averaged spin observables and reference states.
"""

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.operators import (
    PAULI_MATRICES,
    DenseOperator,
    DensityMatrix,
    as_matrix,
    embed_local,
    partial_trace,
)

IMAGINARY_TOL = 1e-10
DOWN = np.array([[0, 0], [0, 1]], dtype=complex)
UP = np.array([[1, 0], [0, 0]], dtype=complex)


def _state_matrix(rho, lattice):
    matrix = as_matrix(rho)
    if matrix.shape[0] != lattice.dim:
        raise ValidationError(
            f'State of dimension {matrix.shape[0]} does not live on {lattice} '
            f'(dimension {lattice.dim}).'
        )
    return matrix


def site_expectations(rho, lattice, axis):
    """Tr[sigma^axis_i rho] for every site i, from single-site reduced states."""
    matrix = _state_matrix(rho, lattice)
    pauli = PAULI_MATRICES[axis.upper()]
    values = np.array([
        np.trace(pauli @ partial_trace(matrix, [site], lattice.n_sites))
        for site in range(lattice.n_sites)
    ])
    worst = float(np.max(np.abs(values.imag)))
    if worst > IMAGINARY_TOL:
        raise ValidationError(f'Expectation of sigma^{axis} has imaginary part {worst:.3e}.')
    return values.real


def average_spin(rho, lattice, axis):
    return float(np.mean(site_expectations(rho, lattice, axis)))


def magnetization(rho, lattice):
    """M = (1/N) sum_i Tr[sigma^z_i rho]."""
    return average_spin(rho, lattice, 'z')


def order_parameter(rho, lattice):
    """m = (1/N) sum_i Tr[sigma^x_i rho]."""
    return average_spin(rho, lattice, 'x')


def average_pauli_operator(lattice, axis):
    """(1/N) sum_i sigma^axis_i as a dense operator, for trajectory recording."""
    pauli = PAULI_MATRICES[axis.upper()]
    total = sum(
        embed_local(pauli, (site,), lattice).matrix for site in range(lattice.n_sites)
    )
    return DenseOperator(total / lattice.n_sites, hermitian=True)


def all_down_state(lattice):
    return DensityMatrix.product([DOWN] * lattice.n_sites)


def all_up_state(lattice):
    return DensityMatrix.product([UP] * lattice.n_sites)


def maximally_mixed_state(lattice):
    return DensityMatrix.maximally_mixed(lattice.n_sites)
