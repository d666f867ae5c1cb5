"""
Dense operators on the qubit Hilbert space.

Site ordering is fixed once: site 0 is the leftmost Kronecker factor, so a
lattice laid out row-major maps site (i, j) of an L x L lattice to index
i * L + j and to the (i * L + j)-th tensor factor. Basis index 0 on a qubit
is spin up (sigma^z = +1) and index 1 is spin down; the decay operator
sigma^- lowers index 0 to index 1.
"""

import logging
from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
POSITIVITY_TOL = -1e-8

PAULI_MATRICES = {
    'I': np.eye(2, dtype=complex),
    'X': np.array([[0, 1], [1, 0]], dtype=complex),
    'Y': np.array([[0, -1j], [1j, 0]], dtype=complex),
    'Z': np.array([[1, 0], [0, -1]], dtype=complex),
}

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T

for _matrix in (*PAULI_MATRICES.values(), SIGMA_MINUS, SIGMA_PLUS):
    _matrix.setflags(write=False)


def as_matrix(value):
    """
    Return the complex ndarray behind an operator-like value.

    Args:
        value: DenseOperator, DensityMatrix or array-like

    Returns:
        np.ndarray: complex square matrix
    """
    if isinstance(value, DenseOperator):
        return value.matrix
    matrix = np.asarray(value, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValidationError(f'Operator must be a square matrix, got shape {matrix.shape}.')
    return matrix


def qubit_count(dim):
    """Number of qubits of a 2^n dimensional space; raises for other sizes."""
    n_qubits = int(round(np.log2(dim))) if dim > 0 else -1
    if n_qubits < 0 or 2 ** n_qubits != dim:
        raise ValidationError(f'Dimension {dim} is not a power of two.')
    return n_qubits


@dataclass(frozen=True, eq=False)
class DenseOperator:
    """
    Complex d x d matrix on the lattice Hilbert space.

    Hamiltonians, jump operators and observables are all DenseOperators.
    Construct with ``hermitian=True`` to have the Hermiticity claim verified.
    """

    matrix: np.ndarray
    hermitian: bool = False

    def __post_init__(self):
        matrix = np.array(as_matrix(self.matrix), dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)
        if self.hermitian:
            deviation = hermiticity_defect(matrix)
            if deviation > HERMITIAN_TOL:
                raise ValidationError(
                    f'Operator claimed Hermitian but max|A - A^dag| = {deviation:.3e}.'
                )

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def n_qubits(self):
        return qubit_count(self.dim)

    def dagger(self):
        return DenseOperator(self.matrix.conj().T, hermitian=self.hermitian)

    def expectation(self, rho):
        """Tr[A rho] for a state of matching dimension."""
        rho_matrix = as_matrix(rho)
        if rho_matrix.shape != self.matrix.shape:
            raise ValidationError(
                f'Dimension mismatch: operator {self.dim}, state {rho_matrix.shape[0]}.'
            )
        return np.einsum('ij,ji->', self.matrix, rho_matrix)


@dataclass(frozen=True, eq=False)
class DensityMatrix(DenseOperator):
    """
    Valid quantum state: unit trace, Hermitian, positive up to numerical slack.

    ``validate=False`` skips the eigenvalue check for internal hot paths that
    only move states between CPTP maps.
    """

    validate: bool = True

    def __post_init__(self):
        super().__post_init__()
        if self.validate:
            check_state(self.matrix)

    @classmethod
    def maximally_mixed(cls, n_qubits):
        dim = 2 ** n_qubits
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def from_pure(cls, psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def product(cls, single_site_states):
        """Tensor product of single-site states, site 0 leftmost."""
        return cls(kron_all([as_matrix(state) for state in single_site_states]))

    @classmethod
    def from_bloch(cls, bloch):
        """Single-qubit state (1 + s . sigma) / 2."""
        sx, sy, sz = bloch
        matrix = 0.5 * (
            PAULI_MATRICES['I']
            + sx * PAULI_MATRICES['X']
            + sy * PAULI_MATRICES['Y']
            + sz * PAULI_MATRICES['Z']
        )
        return cls(matrix)

    @classmethod
    def random(cls, n_qubits, rng=None, rank=None):
        """
        Random state from the Ginibre ensemble.

        Args:
            n_qubits: number of qubits
            rng: numpy Generator or seed
            rank: Ginibre rank (full rank by default)

        Returns:
            DensityMatrix: random valid state
        """
        rng = np.random.default_rng(rng)
        dim = 2 ** n_qubits
        rank = dim if rank is None else rank
        ginibre = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
        matrix = ginibre @ ginibre.conj().T
        return cls(matrix / np.trace(matrix).real)

    def trace_distance(self, other):
        return trace_distance(self.matrix, as_matrix(other))


def hermiticity_defect(matrix):
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def check_state(matrix, tol=STATE_TOL, positivity_tol=POSITIVITY_TOL):
    """
    Verify the density-matrix invariants.

    Raises:
        ValidationError: if trace, Hermiticity or positivity is violated
    """
    trace = np.trace(matrix)
    if abs(trace - 1.0) > tol:
        raise ValidationError(f'State trace is {trace.real:.12f}, expected 1.')
    defect = hermiticity_defect(matrix)
    if defect > tol:
        raise ValidationError(f'State is not Hermitian (max|rho - rho^dag| = {defect:.3e}).')
    smallest = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))[0]
    if smallest < positivity_tol:
        raise ValidationError(f'State is not positive (smallest eigenvalue {smallest:.3e}).')


def kron_all(matrices):
    return reduce(np.kron, matrices, np.eye(1, dtype=complex))


def pauli_string(label):
    """Matrix of a Pauli string such as 'XZ' (site 0 first)."""
    try:
        return kron_all([PAULI_MATRICES[letter] for letter in label.upper()])
    except KeyError as exc:
        raise ValidationError(f'Unknown Pauli label {label!r}.') from exc


def pauli_labels(n_qubits):
    return [''.join(letters) for letters in product('IXYZ', repeat=n_qubits)]


def pauli_basis(n_qubits):
    """List of (label, matrix) for all 4^n Pauli strings, identity first."""
    return [(label, pauli_string(label)) for label in pauli_labels(n_qubits)]


def trace_distance(first, second):
    """
    Trace distance 1/2 ||A - B||_1 of two Hermitian matrices; orthogonal pure
    states are at distance 1.
    """
    difference = as_matrix(first) - as_matrix(second)
    difference = 0.5 * (difference + difference.conj().T)
    return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(difference))))


def _site_count(lattice):
    return int(getattr(lattice, 'n_sites', lattice))


def validate_sites(sites, n_sites):
    sites = tuple(int(site) for site in sites)
    if len(set(sites)) != len(sites):
        raise ValidationError(f'Sites {sites} overlap.')
    for site in sites:
        if site < 0 or site >= n_sites:
            raise ValidationError(f'Site {site} out of range for {n_sites} sites.')
    return sites


def contract_local(local_tensor, tensor, axes):
    """
    Contract a local tensor operator into selected axes of a larger tensor.

    ``local_tensor`` has k output axes followed by k input axes, k being
    len(axes); input axis i contracts with ``tensor`` axis ``axes[i]`` and the
    result keeps the axis layout of ``tensor``.
    """
    width = len(axes)
    contracted = np.tensordot(
        local_tensor, tensor, axes=(list(range(width, 2 * width)), list(axes))
    )
    return np.moveaxis(contracted, list(range(width)), list(axes))


def embed_local(operator, sites, lattice):
    """
    Tensor an operator on ``sites`` with the identity on every other site.

    Args:
        operator: operator on len(sites) qubits, factors in the order of sites
        sites: distinct site indices
        lattice: QubitLattice or total number of sites

    Returns:
        DenseOperator: operator on the full lattice space
    """
    n_sites = _site_count(lattice)
    sites = validate_sites(sites, n_sites)
    local = as_matrix(operator)
    if local.shape[0] != 2 ** len(sites):
        raise ValidationError(
            f'Operator of dimension {local.shape[0]} does not act on {len(sites)} sites.'
        )
    dim = 2 ** n_sites
    identity = np.eye(dim, dtype=complex).reshape((2,) * (2 * n_sites))
    local_tensor = local.reshape((2,) * (2 * len(sites)))
    embedded = contract_local(local_tensor, identity, sites)
    return DenseOperator(embedded.reshape(dim, dim))


def partial_trace(rho, keep, n_qubits):
    """
    Reduced state on the sites in ``keep`` (kept in the given order).
    """
    keep = validate_sites(keep, n_qubits)
    matrix = as_matrix(rho)
    tensor = matrix.reshape((2,) * (2 * n_qubits))
    traced = [site for site in range(n_qubits) if site not in keep]
    letters = [chr(ord('a') + i) for i in range(2 * n_qubits)]
    for site in traced:
        letters[n_qubits + site] = letters[site]
    out = [letters[site] for site in keep] + [letters[n_qubits + site] for site in keep]
    reduced = np.einsum(f"{''.join(letters)}->{''.join(out)}", tensor)
    dim = 2 ** len(keep)
    return reduced.reshape(dim, dim)
