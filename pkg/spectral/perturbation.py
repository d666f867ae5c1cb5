"""
Perturbation series for the steady state and eigenvalues of L0 + L'.

    |rho^(k)>> = -L0^-1 L' |rho^(k-1)>>
    lambda^(1) = <<L_a|L'|R_a>>
    lambda^(2) = sum_{b != a} <<L_a|L'|R_b>> <<L_b|L'|R_a>> / (lambda_a - lambda_b)
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.exceptions import SeriesDivergenceError
from hilbert.operators import as_matrix
from hilbert.superoperators import SuperOp, devectorize, vectorize

from .decomposition import (
    CLUSTER_TOL,
    as_decomposition,
    generalized_inverse,
    steady_state_exact,
)

logger = logging.getLogger(__name__)

GROWTH_RUN = 3


@dataclass(frozen=True, eq=False)
class PerturbationResult:
    """
    Steady-state corrections rho^(0), rho^(1), ... with series diagnostics.

    ``corrections[0]`` is the unperturbed steady state; every later entry is
    traceless. ``ratio`` is the spectral norm of L0^-1 L'.
    """

    corrections: list
    ratio: float
    norms: list = field(default_factory=list)

    @property
    def k_max(self):
        return len(self.corrections) - 1

    @property
    def converges(self):
        return self.ratio < 1.0

    def partial_sum(self, k=None):
        k = self.k_max if k is None else k
        return sum(self.corrections[:k + 1])


def _perturbation_matrix(perturbation):
    return perturbation.matrix if isinstance(perturbation, SuperOp) else np.asarray(perturbation)


def perturb_steady_state(decomposition, perturbation, k_max):
    """
    Corrections to the steady state of L0 through order k_max.

    Args:
        decomposition: SpectralDecomposition of L0 (or L0 itself)
        perturbation: L' as SuperOp or matrix
        k_max: highest order

    Returns:
        PerturbationResult

    Raises:
        SeriesDivergenceError: correction norms keep growing
    """
    if k_max < 0:
        raise ValidationError(f'k_max must be non-negative, got {k_max}.')
    decomposition = as_decomposition(decomposition)
    inverse = generalized_inverse(decomposition).matrix
    step = -inverse @ _perturbation_matrix(perturbation)
    ratio = float(np.linalg.norm(step, 2))
    if ratio >= 1.0:
        logger.warning(f'Perturbation series may diverge: ||L0^-1 L\'|| = {ratio:.4f}')
    rho0 = steady_state_exact(decomposition).matrix
    corrections = [rho0]
    norms = [float(np.linalg.norm(rho0))]
    vector = vectorize(rho0)
    growth = 0
    for order in range(1, k_max + 1):
        vector = step @ vector
        correction = devectorize(vector)
        norm = float(np.linalg.norm(correction))
        growth = growth + 1 if order > 1 and norm > norms[-1] else 0
        corrections.append(correction)
        norms.append(norm)
        if growth >= GROWTH_RUN and ratio >= 1.0:
            raise SeriesDivergenceError(
                f'Steady-state corrections grew for {growth} consecutive orders '
                f'(order {order}: {norm:.3e}).'
            )
    return PerturbationResult(corrections, ratio, norms)


def _mode_index(decomposition, index):
    values = decomposition.eigenvalues
    if not 0 <= index < values.size:
        raise ValidationError(f'Eigenvalue index {index} out of range 0..{values.size - 1}.')
    close = np.abs(values - values[index]) < CLUSTER_TOL
    if np.count_nonzero(close) > 1:
        raise ValidationError(
            f'Eigenvalue {values[index]:.6g} is degenerate; non-degenerate theory does not apply.'
        )
    return index


def _coupling(decomposition, perturbation):
    """Matrix elements <<L_a|L'|R_b>>."""
    return decomposition.left @ _perturbation_matrix(perturbation) @ decomposition.right


def perturb_eigenvalue(decomposition, perturbation, index):
    """
    First and second order corrections to eigenvalue ``index``.

    Returns:
        tuple: (lambda^(1), lambda^(2))
    """
    decomposition = as_decomposition(decomposition)
    index = _mode_index(decomposition, index)
    coupling = _coupling(decomposition, perturbation)
    values = decomposition.eigenvalues
    first = coupling[index, index]
    others = np.arange(values.size) != index
    second = np.sum(
        coupling[index, others] * coupling[others, index] / (values[index] - values[others])
    )
    return complex(first), complex(second)


def perturb_eigenvector(decomposition, perturbation, index):
    """First-order correction |R_a^(1)>> to the right eigenvector of mode ``index``."""
    decomposition = as_decomposition(decomposition)
    index = _mode_index(decomposition, index)
    coupling = _coupling(decomposition, perturbation)
    values = decomposition.eigenvalues
    others = np.arange(values.size) != index
    weights = coupling[others, index] / (values[index] - values[others])
    return decomposition.right[:, others] @ weights


def perturbative_expectation(observable, result):
    """
    Order-by-order contributions Tr[O rho^(n)] and their running sums.

    Returns:
        tuple: (terms, partial_sums) as real arrays
    """
    operator = as_matrix(observable)
    terms = np.array([np.trace(operator @ correction).real for correction in result.corrections])
    return terms, np.cumsum(terms)
