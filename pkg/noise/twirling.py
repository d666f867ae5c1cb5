"""
Pauli twirling and quasi-probability error boosting.

A Pauli channel N = sum_P p_P [P] is diagonal in the Pauli transfer
representation with f_Q = sum_P p_P chi(P, Q), where chi(P, Q) is +1 when P
and Q commute and -1 otherwise. The relation is inverted with
p_P = 4^-n sum_Q chi(P, Q) f_Q.
"""

import logging
from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.exceptions import SingularChannelError
from hilbert.operators import pauli_labels, pauli_string
from hilbert.superoperators import (
    SuperOp,
    conjugation_superop,
    pauli_transfer_matrix,
    require_cptp,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-10
SINGULAR_TOL = 1e-12


def _commutation_sign(first, second):
    """+1 if two Pauli strings commute, -1 otherwise."""
    anticommuting = sum(
        1 for a, b in zip(first, second) if a != 'I' and b != 'I' and a != b
    )
    return 1.0 if anticommuting % 2 == 0 else -1.0


def commutation_table(n_qubits):
    labels = pauli_labels(n_qubits)
    return np.array([[_commutation_sign(p, q) for q in labels] for p in labels])


def _weights_from_diagonal(diagonal, n_qubits):
    return commutation_table(n_qubits) @ np.asarray(diagonal) / 4 ** n_qubits


def _validate_labels(weights):
    lengths = {len(label) for label in weights}
    if len(lengths) != 1 or lengths.pop() not in (1, 2):
        raise ValidationError('Pauli weights need labels of one common length (1 or 2).')
    for label in weights:
        pauli_string(label)


@dataclass(frozen=True)
class PauliChannel:
    """Pauli error channel on one or two qubits, keyed by Pauli label."""

    probabilities: dict

    def __post_init__(self):
        _validate_labels(self.probabilities)
        total = sum(self.probabilities.values())
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f'Pauli probabilities sum to {total:.12f}, expected 1.')
        negative = {k: p for k, p in self.probabilities.items() if p < -PROBABILITY_TOL}
        if negative:
            raise ValidationError(f'Pauli probabilities must be non-negative, got {negative}.')

    @property
    def n_qubits(self):
        return len(next(iter(self.probabilities)))

    def probability(self, label):
        return self.probabilities.get(label, 0.0)

    def vector(self):
        return np.array([self.probability(label) for label in pauli_labels(self.n_qubits)])

    def transfer_diagonal(self):
        return commutation_table(self.n_qubits) @ self.vector()

    def superop(self):
        dim = 2 ** self.n_qubits
        total = SuperOp.zero(dim)
        for label, p in self.probabilities.items():
            total = total + p * conjugation_superop(pauli_string(label))
        return total

    def error_probability(self):
        return 1.0 - self.probability('I' * self.n_qubits)


@dataclass(frozen=True)
class QuasiProbabilityScheme:
    """
    Signed Pauli weights q with sum q = 1; samplable only when every q >= 0.
    """

    weights: dict

    def __post_init__(self):
        _validate_labels(self.weights)
        total = sum(self.weights.values())
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f'Quasi-probabilities sum to {total:.12f}, expected 1.')

    @property
    def n_qubits(self):
        return len(next(iter(self.weights)))

    @property
    def one_norm(self):
        return float(sum(abs(q) for q in self.weights.values()))

    @property
    def is_physical(self):
        return all(q >= -PROBABILITY_TOL for q in self.weights.values())

    def superop(self):
        total = SuperOp.zero(2 ** self.n_qubits)
        for label, q in self.weights.items():
            total = total + q * conjugation_superop(pauli_string(label))
        return total

    def sampling_overhead(self):
        """Variance blow-up gamma^2 of sampling the signed mixture."""
        return self.one_norm ** 2


def pauli_twirl(channel):
    """
    Average P^dag N P over the Pauli group of the channel's support.

    Returns:
        PauliChannel: the twirled channel

    Raises:
        ChannelNotCPTPError: when the input is not a channel
    """
    channel = require_cptp(channel, label='channel to twirl')
    n_qubits = channel.n_qubits
    if n_qubits not in (1, 2):
        raise ValidationError(f'Twirling is supported on 1 or 2 qubits, got {n_qubits}.')
    labels = pauli_labels(n_qubits)
    twirled = SuperOp.zero(channel.hsdim)
    for label in labels:
        conjugation = conjugation_superop(pauli_string(label))
        twirled = twirled + conjugation @ channel @ conjugation
    twirled = twirled * (1.0 / len(labels))
    diagonal = np.diag(pauli_transfer_matrix(twirled)).real
    weights = _weights_from_diagonal(diagonal, n_qubits)
    weights = np.where(np.abs(weights) < PROBABILITY_TOL, 0.0, weights)
    return PauliChannel(dict(zip(labels, weights.tolist())))


def boost_error(channel, target):
    """
    Pauli weights q with (sum_P q_P [P]) N = N_target.

    Both channels are diagonal in the transfer representation, so the
    weights follow from the ratio of their diagonals.

    Raises:
        SingularChannelError: a transfer diagonal entry of N vanishes
    """
    if channel.n_qubits != target.n_qubits:
        raise ValidationError('Channels act on different numbers of qubits.')
    diagonal = channel.transfer_diagonal()
    smallest = float(np.min(np.abs(diagonal)))
    if smallest < SINGULAR_TOL:
        raise SingularChannelError(
            f'Pauli channel is singular (smallest transfer eigenvalue {smallest:.3e}).'
        )
    ratio = target.transfer_diagonal() / diagonal
    weights = _weights_from_diagonal(ratio, channel.n_qubits)
    scheme = QuasiProbabilityScheme(dict(zip(pauli_labels(channel.n_qubits), weights.tolist())))
    if not scheme.is_physical:
        logger.info(
            f'Boosting needs signed weights (one-norm {scheme.one_norm:.6f}); '
            f'target is not reachable by Pauli sampling alone'
        )
    return scheme


def depolarizing_pauli_channel(error, n_qubits):
    """Identity with probability 1 - error, each other Pauli with error / (4^n - 1)."""
    if not 0.0 <= error <= 1.0:
        raise ValidationError(f'Depolarizing error must lie in [0, 1], got {error}.')
    labels = pauli_labels(n_qubits)
    share = error / (len(labels) - 1)
    return PauliChannel({label: (1.0 - error if i == 0 else share) for i, label in enumerate(labels)})


def depolarizing_target(channel):
    """Depolarizing channel with error (4^n - 1) max p, reachable with q >= 0."""
    n_labels = 4 ** channel.n_qubits
    worst = max(
        (p for label, p in channel.probabilities.items() if set(label) != {'I'}), default=0.0
    )
    return depolarizing_pauli_channel(min(1.0, (n_labels - 1) * worst), channel.n_qubits)
