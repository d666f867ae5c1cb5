"""
Hilbert-Schmidt space: vectorization and superoperator matrices.

Vectorization is row-stacking, vec(A X B) = (A kron B^T) vec(X), which is
numpy's C order. With this convention the Lindbladian matrix is

    L = -i (H kron 1 - 1 kron H^T)
        + sum_k gamma_k [A_k kron A_k^* - 1/2 (A_k^dag A_k kron 1 + 1 kron A_k^T A_k^*)].
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError
from scipy.linalg import expm

from .exceptions import ChannelNotCPTPError
from .operators import (
    DenseOperator,
    HERMITIAN_TOL,
    as_matrix,
    contract_local,
    hermiticity_defect,
    pauli_basis,
    qubit_count,
    validate_sites,
)

logger = logging.getLogger(__name__)

VECTORIZATION_ORDER = 'C'
TRACE_TOL = 1e-10
CHOI_TOL = 1e-10


def vectorize(operator):
    """Row-stacked HS vector |A>> of a square operator."""
    return as_matrix(operator).reshape(-1, order=VECTORIZATION_ORDER).copy()


def devectorize(vector):
    vector = np.asarray(vector, dtype=complex).ravel()
    dim = int(round(np.sqrt(vector.size)))
    if dim * dim != vector.size:
        raise ValidationError(f'HS vector length {vector.size} is not a perfect square.')
    return vector.reshape((dim, dim), order=VECTORIZATION_ORDER).copy()


def hs_inner(first, second):
    """<<A|B>> = Tr(A^dag B)."""
    return np.vdot(vectorize(first), vectorize(second))


def sandwich(left, right):
    """Matrix of the map X -> left X right."""
    return np.kron(as_matrix(left), as_matrix(right).T)


@dataclass(frozen=True, eq=False)
class SuperOp:
    """
    Linear map on operators, stored as a d^2 x d^2 matrix.

    Supports +, -, scalar *, composition with @ and application to
    operators with ``apply``.
    """

    matrix: np.ndarray

    # numpy scalars defer to __rmul__ instead of building object arrays
    __array_ufunc__ = None

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValidationError(f'Superoperator must be square, got {matrix.shape}.')
        hsdim = int(round(np.sqrt(matrix.shape[0])))
        if hsdim * hsdim != matrix.shape[0]:
            raise ValidationError(f'Superoperator size {matrix.shape[0]} is not d^2.')
        matrix.setflags(write=False)
        object.__setattr__(self, 'matrix', matrix)

    @property
    def hsdim(self):
        return int(round(np.sqrt(self.matrix.shape[0])))

    @property
    def n_qubits(self):
        return qubit_count(self.hsdim)

    @classmethod
    def zero(cls, hsdim):
        return cls(np.zeros((hsdim ** 2, hsdim ** 2), dtype=complex))

    @classmethod
    def identity(cls, hsdim):
        return cls(np.eye(hsdim ** 2, dtype=complex))

    def apply(self, operator):
        matrix = as_matrix(operator)
        if matrix.shape[0] != self.hsdim:
            raise ValidationError(
                f'Dimension mismatch: map on {self.hsdim}, operator on {matrix.shape[0]}.'
            )
        return devectorize(self.matrix @ vectorize(matrix))

    def __add__(self, other):
        return SuperOp(self.matrix + _superop_matrix(other))

    def __sub__(self, other):
        return SuperOp(self.matrix - _superop_matrix(other))

    def __neg__(self):
        return SuperOp(-self.matrix)

    def __mul__(self, scalar):
        return SuperOp(scalar * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return SuperOp(self.matrix @ _superop_matrix(other))

    def commutator(self, other):
        other = _superop_matrix(other)
        return SuperOp(self.matrix @ other - other @ self.matrix)

    def exp(self, t=1.0):
        """exp(t S) via scipy's scaling-and-squaring Pade approximant."""
        return SuperOp(expm(t * self.matrix))

    def norm(self):
        return float(np.linalg.norm(self.matrix))

    def trace_row_defect(self, target_row=None):
        """max |<<1| S - target_row|| (zero row for generators, <<1| for channels)."""
        identity_bra = vectorize(np.eye(self.hsdim)).conj()
        row = identity_bra @ self.matrix
        if target_row is not None:
            row = row - target_row
        return float(np.max(np.abs(row)))

    def is_trace_annihilating(self, tol=TRACE_TOL):
        return self.trace_row_defect() <= tol

    def is_trace_preserving(self, tol=TRACE_TOL):
        identity_bra = vectorize(np.eye(self.hsdim)).conj()
        return self.trace_row_defect(identity_bra) <= tol


def _superop_matrix(value):
    if isinstance(value, SuperOp):
        return value.matrix
    return np.asarray(value, dtype=complex)


def commutator(first, second):
    first = first if isinstance(first, SuperOp) else SuperOp(first)
    return first.commutator(second)


def hamiltonian_superop(hamiltonian):
    """Matrix of -i[H, .]."""
    H = as_matrix(hamiltonian)
    identity = np.eye(H.shape[0], dtype=complex)
    return SuperOp(-1j * (np.kron(H, identity) - np.kron(identity, H.T)))


def dissipator_superop(jump, rate=1.0):
    """Matrix of gamma (A . A^dag - 1/2 {A^dag A, .})."""
    A = as_matrix(jump)
    identity = np.eye(A.shape[0], dtype=complex)
    AdA = A.conj().T @ A
    matrix = np.kron(A, A.conj()) - 0.5 * (np.kron(AdA, identity) + np.kron(identity, AdA.T))
    return SuperOp(rate * matrix)


def conjugation_superop(operator):
    """Matrix of the map [P] : X -> P X P^dag."""
    P = as_matrix(operator)
    return SuperOp(np.kron(P, P.conj()))


def lindbladian_matrix(hamiltonian, jumps=()):
    """
    Build the Lindbladian matrix in the row-stacked HS representation.

    Args:
        hamiltonian: Hermitian DenseOperator or matrix
        jumps: iterable of (jump operator, rate) pairs

    Returns:
        SuperOp: the generator L with <<1| L = 0

    Raises:
        ValidationError: non-Hermitian Hamiltonian, negative rate or
            dimension mismatch
    """
    H = as_matrix(hamiltonian)
    defect = hermiticity_defect(H)
    if defect > HERMITIAN_TOL:
        raise ValidationError(f'Hamiltonian is not Hermitian (max|H - H^dag| = {defect:.3e}).')
    generator = hamiltonian_superop(H)
    for jump, rate in jumps:
        if rate < 0:
            raise ValidationError(f'Dissipation rate must be non-negative, got {rate}.')
        A = as_matrix(jump)
        if A.shape != H.shape:
            raise ValidationError(
                f'Jump operator dimension {A.shape[0]} does not match Hamiltonian {H.shape[0]}.'
            )
        generator = generator + dissipator_superop(A, rate)
    return generator


def apply_lindbladian_directly(hamiltonian, jumps, rho):
    """Evaluate -i[H, rho] + sum_k gamma_k D[A_k](rho) without vectorizing."""
    H = as_matrix(hamiltonian)
    rho = as_matrix(rho)
    result = -1j * (H @ rho - rho @ H)
    for jump, rate in jumps:
        A = as_matrix(jump)
        AdA = A.conj().T @ A
        result = result + rate * (A @ rho @ A.conj().T - 0.5 * (AdA @ rho + rho @ AdA))
    return result


def superop_tensor(superop):
    """Reshape a k-qubit superoperator into its (2,)*4k local tensor."""
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    return superop.matrix.reshape((2,) * (4 * superop.n_qubits))


def embed_superoperator(superop, sites, n_sites):
    """
    Dense d^2 x d^2 matrix of a local map acting on ``sites`` of n_sites qubits.

    Used as the reference route for small lattices; the propagation code never
    forms it.
    """
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    sites = validate_sites(sites, n_sites)
    if superop.n_qubits != len(sites):
        raise ValidationError(
            f'Map on {superop.n_qubits} qubits cannot act on sites {sites}.'
        )
    dim = 2 ** n_sites
    identity = np.eye(dim * dim, dtype=complex).reshape((2,) * (4 * n_sites))
    axes = list(sites) + [n_sites + site for site in sites]
    embedded = contract_local(superop_tensor(superop), identity, axes)
    return SuperOp(embedded.reshape(dim * dim, dim * dim))


def choi_matrix(superop):
    """
    Choi matrix sum_ij |i><j| kron S(|i><j|) of a map.

    Complete positivity is equivalent to this matrix being positive
    semidefinite.
    """
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    d = superop.hsdim
    tensor = superop.matrix.reshape(d, d, d, d)
    return tensor.transpose(2, 0, 3, 1).reshape(d * d, d * d)


def choi_min_eigenvalue(superop):
    choi = choi_matrix(superop)
    return float(np.linalg.eigvalsh(0.5 * (choi + choi.conj().T))[0])


def is_cptp(superop, tol=CHOI_TOL):
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    return superop.is_trace_preserving(tol) and choi_min_eigenvalue(superop) >= -tol


def require_cptp(superop, tol=CHOI_TOL, label='channel'):
    """Raise ChannelNotCPTPError unless the map is CPTP within tol."""
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    identity_bra = vectorize(np.eye(superop.hsdim)).conj()
    trace_defect = superop.trace_row_defect(identity_bra)
    if trace_defect > tol:
        raise ChannelNotCPTPError(
            f'{label} is not trace preserving (defect {trace_defect:.3e}).'
        )
    smallest = choi_min_eigenvalue(superop)
    if smallest < -tol:
        raise ChannelNotCPTPError(
            f'{label} is not completely positive (Choi eigenvalue {smallest:.3e}).'
        )
    return superop


def pauli_transfer_matrix(superop):
    """
    Real matrix R_ij = Tr(P_i S(P_j)) / 2^n in the Pauli basis (identity first).
    """
    superop = superop if isinstance(superop, SuperOp) else SuperOp(superop)
    basis = pauli_basis(superop.n_qubits)
    vectors = np.array([vectorize(matrix) for _, matrix in basis]).T
    transfer = vectors.conj().T @ superop.matrix @ vectors / superop.hsdim
    return transfer.real if np.allclose(transfer.imag, 0.0, atol=1e-12) else transfer


def from_pauli_transfer_matrix(transfer):
    transfer = np.asarray(transfer, dtype=complex)
    hsdim = int(round(np.sqrt(transfer.shape[0])))
    basis = pauli_basis(qubit_count(hsdim))
    vectors = np.array([vectorize(matrix) for _, matrix in basis]).T
    return SuperOp(vectors @ transfer @ vectors.conj().T / hsdim)


def kraus_superop(krauses):
    """Matrix of X -> sum_K K X K^dag."""
    return SuperOp(sum(np.kron(K, np.conj(K)) for K in krauses))


def random_kraus(n_qubits, rng=None, kraus_rank=None):
    """
    Kraus operators of a random channel, cut from a Stiefel isometry.

    The stacked operators form the columns of an isometry, so sum K^dag K = 1.
    """
    rng = np.random.default_rng(rng)
    dim = 2 ** n_qubits
    kraus_rank = dim if kraus_rank is None else kraus_rank
    ginibre = rng.normal(size=(dim * kraus_rank, dim)) + 1j * rng.normal(size=(dim * kraus_rank, dim))
    isometry, _ = np.linalg.qr(ginibre)
    return list(isometry.reshape(kraus_rank, dim, dim))


def random_channel(n_qubits, rng=None, kraus_rank=None):
    return kraus_superop(random_kraus(n_qubits, rng, kraus_rank))


def random_lindbladian(n_qubits, rng=None, n_jumps=2, scale=1.0):
    """Random generator with a Gaussian Hermitian H and Gaussian jump operators."""
    rng = np.random.default_rng(rng)
    dim = 2 ** n_qubits
    raw = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    hamiltonian = 0.5 * scale * (raw + raw.conj().T)
    jumps = []
    for _ in range(n_jumps):
        jump = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        jumps.append((jump * np.sqrt(scale) / np.sqrt(dim), float(rng.uniform(0.2, 1.0))))
    return lindbladian_matrix(DenseOperator(hamiltonian), jumps)
