"""
Noise generators E attached to Trotter gates.

Every generator is trace annihilating, so exp(r tau E) is a channel for
r, tau >= 0. Non-depolarizing kinds are rescaled to the depolarizing
generator's Pauli-basis norm on the same support, so a common r means a
common noise norm.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.operators import PAULI_MATRICES, pauli_string
from hilbert.superoperators import (
    SuperOp,
    conjugation_superop,
    dissipator_superop,
    embed_superoperator,
    pauli_transfer_matrix,
    vectorize,
)

logger = logging.getLogger(__name__)

NOISE_KINDS = (
    ('none', 'No noise'),
    ('depolarizing', 'Depolarizing'),
    ('random-pauli', 'Random Pauli'),
    ('transverse-damping', 'Transverse damping'),
)

# jump operators of the x and y damping dissipators
SIGMA_X_MINUS = 0.5 * (PAULI_MATRICES['Z'] + 1j * PAULI_MATRICES['Y'])
SIGMA_Y_MINUS = 0.5 * (PAULI_MATRICES['Z'] - 1j * PAULI_MATRICES['X'])


def _support_size(sites):
    size = len(sites)
    if size not in (1, 2):
        raise ValidationError(f'Noise generators act on 1 or 2 sites, got {size}.')
    return size


def depolarizing_generator(sites):
    """E = 1/2^k Tr_A(.) - . on the k = len(sites) qubits of the support."""
    size = _support_size(sites)
    dim = 2 ** size
    identity = vectorize(np.eye(dim))
    matrix = np.outer(identity, identity.conj()) / dim - np.eye(dim * dim)
    return SuperOp(matrix)


def _single_site_transverse_damping():
    return 0.5 * (dissipator_superop(SIGMA_X_MINUS) + dissipator_superop(SIGMA_Y_MINUS))


def transverse_damping_generator(sites=(0,)):
    """
    Equal mixture of damping along x and along y on each site of the support.

    On a two-site gate the single-site generators of both sites are summed.
    """
    size = _support_size(sites)
    local = _single_site_transverse_damping()
    if size == 1:
        return local
    return embed_superoperator(local, (0,), 2) + embed_superoperator(local, (1,), 2)


def pauli_conjugation_generator(label):
    """E_P = [P . P^dag] - [.] for a Pauli string P."""
    matrix = pauli_string(label)
    return conjugation_superop(matrix) - SuperOp.identity(matrix.shape[0])


def _commutes(first, second):
    return np.allclose(first @ second, second @ first)


def allowed_pauli_labels(kind, axis=None, loosened=False):
    """
    Non-identity Pauli strings whose conjugation may act as noise on a gate.

    Dissipator gates allow sigma^z only. Bond gates allow the two-site strings
    commuting with sigma^z sigma^z; ``loosened`` swaps that constraint for the
    gate's own sigma^a sigma^a.
    """
    if kind == 'dissipator':
        labels = ['Z']
    elif kind == 'bond':
        target_axis = (axis or 'z') if loosened else 'z'
        target = pauli_string(target_axis.upper() * 2)
        labels = [
            ''.join(letters) for letters in product('IXYZ', repeat=2)
            if ''.join(letters) != 'II' and _commutes(pauli_string(''.join(letters)), target)
        ]
    else:
        raise ValidationError(f'Unknown gate kind {kind!r}.')
    if not labels:
        raise ValidationError(f'No Pauli noise is allowed on {kind} gates.')
    return labels


def random_pauli_generator(gate, loosened=False, signs=None):
    """
    Uniform mixture of the Pauli-conjugation generators allowed on ``gate``.

    Args:
        gate: GateGenerator (only kind, axis and support are read)
        loosened: use the gate's own axis for the bond constraint
        signs: optional +-1 per allowed label (unphysical experiment)

    Returns:
        SuperOp: the unnormalized generator on the gate support
    """
    labels = allowed_pauli_labels(gate.kind, gate.axis, loosened)
    signs = np.ones(len(labels)) if signs is None else np.asarray(signs, dtype=float)
    if signs.shape != (len(labels),):
        raise ValidationError(f'Expected {len(labels)} signs, got {signs.shape}.')
    generator = SuperOp.zero(2 ** gate.n_sites)
    for label, sign in zip(labels, signs):
        generator = generator + sign * pauli_conjugation_generator(label)
    return generator * (1.0 / len(labels))


def noise_norm(generator):
    """Frobenius norm of the map's Pauli transfer matrix."""
    return float(np.linalg.norm(pauli_transfer_matrix(generator)))


@lru_cache(maxsize=None)
def depolarizing_norm(size):
    return noise_norm(depolarizing_generator(tuple(range(size))))


@dataclass(frozen=True)
class NoiseModel:
    """
    Which noise acts on the gates, and how it is normalized.

    ``signed`` draws a seeded +-1 per random-Pauli term; such mixtures are not
    guaranteed to be physical, so channels built from them skip the CPTP check.
    """

    kind: str = 'depolarizing'
    loosened: bool = False
    signed: bool = False
    seed: int = 0
    normalize: bool = True

    def __post_init__(self):
        if self.kind not in dict(NOISE_KINDS):
            raise ValidationError(f'Unknown noise kind {self.kind!r}.')
        if self.signed and self.kind != 'random-pauli':
            raise ValidationError('Signed mixtures only exist for random-Pauli noise.')
        if self.signed:
            logger.warning(
                f'Signed random-Pauli noise (seed {self.seed}) is not guaranteed CPTP; '
                f'channel checks are disabled for it.'
            )

    @property
    def symmetric(self):
        """True when the generators commute with the global sigma^z parity."""
        return self.kind != 'transverse-damping'

    @property
    def physical(self):
        return not self.signed

    def _signs(self, gate):
        if not self.signed:
            return None
        count = len(allowed_pauli_labels(gate.kind, gate.axis, self.loosened))
        rng = np.random.default_rng([self.seed, gate.index])
        return rng.choice([-1.0, 1.0], size=count)

    def raw_generator(self, gate):
        sites = tuple(range(gate.n_sites))
        if self.kind == 'none':
            return SuperOp.zero(2 ** gate.n_sites)
        if self.kind == 'depolarizing':
            return depolarizing_generator(sites)
        if self.kind == 'transverse-damping':
            return transverse_damping_generator(sites)
        return random_pauli_generator(gate, self.loosened, self._signs(gate))

    def norm_factor(self, gate):
        """Factor ||E_depolarizing|| / ||E|| on the gate support (1 when not normalizing)."""
        if not self.normalize or self.kind in ('none', 'depolarizing'):
            return 1.0
        norm = noise_norm(self.raw_generator(gate))
        return depolarizing_norm(gate.n_sites) / norm

    def generator_for(self, gate):
        return self.raw_generator(gate) * self.norm_factor(gate)

    def as_dict(self):
        return {
            'kind': self.kind,
            'loosened': self.loosened,
            'signed': self.signed,
            'seed': self.seed,
            'normalize': self.normalize,
        }


def attach_noise(schedule, noise, r, r_overrides=None):
    """
    Give every gate the noise model and strength r (per-gate overrides win).
    """
    r_overrides = r_overrides or {}
    unknown = set(r_overrides) - {gate.index for gate in schedule}
    if unknown:
        raise ValidationError(f'r overrides name unknown gate indices {sorted(unknown)}.')
    return tuple(gate.with_noise(noise, r_overrides.get(gate.index, r)) for gate in schedule)
