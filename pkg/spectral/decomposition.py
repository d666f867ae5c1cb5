"""
Dense Liouvillian diagonalization: spectrum, steady state, gap and the
generalized inverse on the complement of the steady state.

Only the diagonalizable case is handled. A defective generator shows up as
an ill-conditioned right eigenvector matrix and is reported, not repaired.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError
from scipy.linalg import eig, expm

from hilbert.exceptions import DefectiveSpectrumError, DegenerateSteadyStateError
from hilbert.operators import DensityMatrix, as_matrix
from hilbert.superoperators import SuperOp, devectorize, vectorize

logger = logging.getLogger(__name__)

MAX_HS_DIM = 4096
ZERO_TOL = 1e-10
CLUSTER_TOL = 1e-8
BIORTHONORMAL_TOL = 1e-8
CONDITION_LIMIT = 1e10
STEADY_SCALE_TOL = 1e-9


def _generator_matrix(generator):
    if isinstance(generator, SuperOp):
        return generator.matrix
    return np.asarray(generator, dtype=complex)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Biorthonormal eigensystem L = sum_a lambda_a |R_a>><<L_a|.

    Eigenvalues are sorted by decreasing real part, so index 0 is the
    steady-state eigenvalue of a generator with a unique steady state.
    ``right`` holds the |R_a>> as columns and ``left`` the <<L_a| as rows.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    residual: float
    condition_number: float
    clusters: list = field(default_factory=list)

    @property
    def hsdim(self):
        return int(round(np.sqrt(self.eigenvalues.size)))

    def zero_indices(self, tol=ZERO_TOL):
        return [i for i, value in enumerate(self.eigenvalues) if abs(value) <= tol]

    def projector(self, index):
        return np.outer(self.right[:, index], self.left[index])

    def nonzero(self, tol=ZERO_TOL):
        return np.array([value for value in self.eigenvalues if abs(value) > tol])


def degeneracy_clusters(eigenvalues, tol=CLUSTER_TOL):
    """Groups of indices whose eigenvalues lie within tol of each other."""
    clusters = []
    assigned = set()
    for i, value in enumerate(eigenvalues):
        if i in assigned:
            continue
        group = [j for j in range(i, len(eigenvalues))
                 if j not in assigned and abs(eigenvalues[j] - value) < tol]
        assigned.update(group)
        if len(group) > 1:
            clusters.append(group)
    return clusters


def spectrum(generator):
    """
    Diagonalize a dense generator (at most 4096 x 4096).

    Returns:
        SpectralDecomposition

    Raises:
        ValidationError: matrix too large
        DefectiveSpectrumError: eigenvectors cannot be biorthonormalized
    """
    matrix = _generator_matrix(generator)
    if matrix.shape[0] > MAX_HS_DIM:
        raise ValidationError(
            f'Dense diagonalization is limited to {MAX_HS_DIM} x {MAX_HS_DIM}, got {matrix.shape}.'
        )
    values, right = eig(matrix)
    order = np.lexsort((-values.imag, -values.real))
    values, right = values[order], right[:, order]
    condition_number = float(np.linalg.cond(right))
    if not np.isfinite(condition_number) or condition_number > CONDITION_LIMIT:
        raise DefectiveSpectrumError(
            f'Eigenvector matrix is ill-conditioned (cond {condition_number:.3e}); '
            f'the generator is likely defective.',
            condition_number=condition_number,
        )
    left = np.linalg.solve(right, np.eye(matrix.shape[0]))
    residual = float(np.max(np.abs(left @ right - np.eye(matrix.shape[0]))))
    eigen_residual = float(np.max(np.abs(left @ matrix - values[:, None] * left)))
    if residual > BIORTHONORMAL_TOL:
        raise DefectiveSpectrumError(
            f'Biorthonormality residual {residual:.3e} exceeds {BIORTHONORMAL_TOL:.0e}.',
            condition_number=condition_number,
            residual=residual,
        )
    if eigen_residual > 1e-6 * max(1.0, float(np.max(np.abs(values)))):
        logger.warning(f'Left eigenvector residual {eigen_residual:.3e} (cond {condition_number:.3e})')
    clusters = degeneracy_clusters(values)
    if clusters:
        logger.debug(f'{len(clusters)} degenerate eigenvalue clusters')
    return SpectralDecomposition(values, right, left, residual, condition_number, clusters)


def as_decomposition(value):
    return value if isinstance(value, SpectralDecomposition) else spectrum(value)


def steady_index(decomposition, tol=ZERO_TOL):
    zeros = decomposition.zero_indices(tol)
    if len(zeros) != 1:
        raise DegenerateSteadyStateError(
            f'Expected exactly one zero eigenvalue, found {len(zeros)} '
            f'(smallest |lambda| = {np.min(np.abs(decomposition.eigenvalues)):.3e}).'
        )
    return zeros[0]


def _normalized_state(vector):
    matrix = devectorize(vector)
    trace = np.trace(matrix)
    if abs(trace) < STEADY_SCALE_TOL:
        raise DegenerateSteadyStateError('Null vector is traceless; it is not a state.')
    matrix = matrix / trace
    return DensityMatrix(0.5 * (matrix + matrix.conj().T))


def steady_state_exact(generator):
    """Unique null vector of L, rescaled to unit trace and Hermitized."""
    decomposition = as_decomposition(generator)
    return _normalized_state(decomposition.right[:, steady_index(decomposition)])


def relaxation_gap(generator):
    """Gamma = min(-Re lambda) over the non-steady eigenvalues."""
    decomposition = as_decomposition(generator)
    index = steady_index(decomposition)
    rest = np.delete(decomposition.eigenvalues, index)
    return float(np.min(-rest.real)) if rest.size else 0.0


def generalized_inverse(decomposition):
    """
    sum over non-steady modes of |R_a>><<L_a| / lambda_a.

    Its products with L on either side equal 1 - |R_0>><<L_0|.
    """
    index = steady_index(decomposition)
    values = decomposition.eigenvalues
    others = [a for a in range(values.size) if a != index]
    smallest = min((abs(values[a]) for a in others), default=np.inf)
    if smallest < ZERO_TOL:
        logger.warning(f'Generalized inverse is ill-conditioned: non-steady |lambda| = {smallest:.3e}')
    right = decomposition.right[:, others]
    left = decomposition.left[others]
    return SuperOp((right / values[others]) @ left)


def evolution_superoperator(decomposition, t):
    """exp(L t) = sum_a exp(lambda_a t) |R_a>><<L_a| for diagonalizable L."""
    phases = np.exp(decomposition.eigenvalues * t)
    return SuperOp((decomposition.right * phases) @ decomposition.left)


def evolve_exact(generator, rho, t):
    """exp(L t) rho by a dense matrix exponential."""
    propagator = expm(t * _generator_matrix(generator))
    result = devectorize(propagator @ vectorize(as_matrix(rho)))
    return DensityMatrix(result, validate=False)


def steady_state_of_channel(channel, tol=1e-9):
    """
    Fixed point of a channel, from its eigenvector with eigenvalue closest to 1.
    """
    matrix = _generator_matrix(channel)
    values, vectors = eig(matrix)
    distances = np.abs(values - 1.0)
    order = np.argsort(distances)
    if distances[order[0]] > tol:
        raise DegenerateSteadyStateError(
            f'Channel has no eigenvalue 1 (closest at distance {distances[order[0]]:.3e}).'
        )
    if distances.size > 1 and distances[order[1]] <= tol:
        raise DegenerateSteadyStateError('Channel has more than one fixed point.')
    return _normalized_state(vectors[:, order[0]])


@dataclass(frozen=True)
class EigenvalueMatch:
    reference: int
    candidate: int
    distance: float
    ambiguous: bool = False


@dataclass(frozen=True)
class MatchReport:
    matches: list
    unmatched_reference: list
    unmatched_candidates: list

    @property
    def ambiguous(self):
        return [match for match in self.matches if match.ambiguous]


def match_eigenvalues(reference, candidates, radius=np.inf, imag_tol=1e-9):
    """
    Pair eigenvalues by nearest distance in the complex plane.

    Only values with Im >= 0 are paired; partners of complex-conjugate values
    follow from their mirror images, so conjugate pairs always stay paired
    together. A pairing is ambiguous when a second candidate also lies within
    ``radius`` of the reference value.
    """
    reference = np.asarray(reference, dtype=complex)
    candidates = np.asarray(candidates, dtype=complex)
    upper_ref = [i for i, v in enumerate(reference) if v.imag >= -imag_tol]
    upper_cand = [j for j, v in enumerate(candidates) if v.imag >= -imag_tol]
    pairs = sorted(
        (abs(reference[i] - candidates[j]), i, j)
        for i in upper_ref for j in upper_cand
        if abs(reference[i] - candidates[j]) <= radius
    )
    used_ref, used_cand, matches = set(), set(), []
    for distance, i, j in pairs:
        if i in used_ref or j in used_cand:
            continue
        within = sum(1 for k in upper_cand if abs(reference[i] - candidates[k]) <= radius)
        ambiguous = np.isfinite(radius) and within > 1
        used_ref.add(i)
        used_cand.add(j)
        matches.append(EigenvalueMatch(i, j, float(distance), bool(ambiguous)))
    for match in list(matches):
        i, j = match.reference, match.candidate
        if reference[i].imag > imag_tol and candidates[j].imag > imag_tol:
            mirror_i = _conjugate_index(reference, i, used_ref, imag_tol)
            mirror_j = _conjugate_index(candidates, j, used_cand, imag_tol)
            if mirror_i is not None and mirror_j is not None:
                used_ref.add(mirror_i)
                used_cand.add(mirror_j)
                matches.append(EigenvalueMatch(mirror_i, mirror_j, match.distance, match.ambiguous))
    if any(match.ambiguous for match in matches):
        logger.warning(f'{sum(m.ambiguous for m in matches)} ambiguous eigenvalue pairings')
    return MatchReport(
        sorted(matches, key=lambda match: match.reference),
        [i for i in range(reference.size) if i not in used_ref],
        [j for j in range(candidates.size) if j not in used_cand],
    )


def _conjugate_index(values, index, used, imag_tol):
    target = np.conj(values[index])
    best, best_distance = None, np.inf
    for k, value in enumerate(values):
        if k in used or value.imag >= -imag_tol:
            continue
        distance = abs(value - target)
        if distance < best_distance:
            best, best_distance = k, distance
    return best
