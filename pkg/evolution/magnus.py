"""
Effective Lindbladian of one noisy Trotter step by the Magnus expansion.

For the step exp(G_N tau) ... exp(G_1 tau) with G_j = G_id_j + r E_j,

    Omega_1 = tau sum_j G_j
    Omega_2 = tau^2/2  sum_{j1>=j2} M^-1 [G_j1, G_j2]
    Omega_3 = tau^3/6  sum_{j1>=j2>=j3} M^-1 ([G_j1,[G_j2,G_j3]] + [G_j3,[G_j2,G_j1]])
    Omega_4 = tau^4/12 sum_{j1>=...>=j4} M^-1 ([[[G1,G2],G3],G4] + [G1,[[G2,G3],G4]]
                                            + [G1,[G2,[G3,G4]]] + [G2,[G3,[G4,G1]]])

with M the product of factorials of index occupation numbers. Each G slot
is split into its ideal part and its noise part; a bracket with n slots of
which k carry noise is of joint order (n - 1) + k in (tau, r), and
L_eff^(order) collects all brackets of that order.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations_with_replacement, product

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.operators import PAULI_MATRICES, partial_trace
from hilbert.superoperators import SuperOp, embed_superoperator, vectorize, devectorize
from xyz_model.model import (
    AXES,
    DENSE_QUBIT_LIMIT,
    GateGenerator,
    bond_generator,
    decay_generator,
)

logger = logging.getLogger(__name__)

MAX_ORDER = 3
OMEGA_PREFACTORS = {1: 1.0, 2: 1 / 2, 3: 1 / 6, 4: 1 / 12}


@dataclass(frozen=True, eq=False)
class MagnusResult:
    """
    Graded terms L_eff^(0) ... L_eff^(order) of one noisy Trotter step.

    ``multiplicities`` counts, per Magnus level n, how many index tuples
    contributed with each weight M.
    """

    terms: tuple
    tau: float
    r: float
    order: int
    multiplicities: dict = field(default_factory=dict)

    def partial_sum(self, order=None):
        order = self.order if order is None else order
        total = self.terms[0]
        for term in self.terms[1:order + 1]:
            total = total + term
        return total

    @property
    def total(self):
        return self.partial_sum()


class _Slot:
    """A full-space superoperator tagged with the sites it touches."""

    __slots__ = ('matrix', 'support')

    def __init__(self, matrix, support):
        self.matrix = matrix
        self.support = frozenset(support)


def _bracket(first, second):
    if first is None or second is None or not (first.support & second.support):
        return None
    matrix = first.matrix @ second.matrix - second.matrix @ first.matrix
    return _Slot(matrix, first.support | second.support)


def _nested_brackets(slots):
    """Bracket combination of Omega_n for slots in (j1, j2, ...) order."""
    n = len(slots)
    if n == 1:
        return [slots[0]]
    if n == 2:
        return [_bracket(slots[0], slots[1])]
    if n == 3:
        a, b, c = slots
        return [_bracket(a, _bracket(b, c)), _bracket(c, _bracket(b, a))]
    a, b, c, d = slots
    return [
        _bracket(_bracket(_bracket(a, b), c), d),
        _bracket(a, _bracket(_bracket(b, c), d)),
        _bracket(a, _bracket(b, _bracket(c, d))),
        _bracket(b, _bracket(c, _bracket(d, a))),
    ]


def occupation_weight(indices):
    """M(j1, j2, ...) = prod_l m_l! over occupation numbers."""
    return math.prod(math.factorial(count) for count in Counter(indices).values())


def _embedded_parts(gates, r, n_sites):
    ideal, noisy = [], []
    for gate in gates:
        ideal.append(_Slot(embed_superoperator(gate.ideal, gate.sites, n_sites).matrix, gate.sites))
        strength = gate.r if r is None else r
        if gate.noise is None or strength == 0:
            noisy.append(None)
        else:
            local = strength * gate.noise_generator()
            noisy.append(_Slot(embed_superoperator(local, gate.sites, n_sites).matrix, gate.sites))
    return ideal, noisy


def magnus_effective(gates, tau, r=None, order=MAX_ORDER, n_sites=None):
    """
    Graded Magnus expansion of one noisy Trotter step.

    Args:
        gates: ordered schedule of GateGenerators (noise attached or not)
        tau: Trotter step
        r: homogeneous noise strength; defaults to each gate's own r
        order: highest joint (tau, r) order, at most 3
        n_sites: number of qubits of the full space (inferred by default)

    Returns:
        MagnusResult

    Raises:
        ValidationError: order above 3 or a space too large to form densely
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValidationError(f'Magnus order must lie in 0..{MAX_ORDER}, got {order}.')
    gates = tuple(gates)
    n_sites = n_sites or 1 + max(max(gate.sites) for gate in gates)
    if n_sites > DENSE_QUBIT_LIMIT:
        raise ValidationError(
            f'Magnus terms are formed densely; {n_sites} qubits exceeds {DENSE_QUBIT_LIMIT}.'
        )
    ideal, noisy = _embedded_parts(gates, r, n_sites)
    size = 4 ** n_sites
    terms = [np.zeros((size, size), dtype=complex) for _ in range(order + 1)]
    multiplicities = {}
    for level in range(1, order + 2):
        tally = Counter()
        prefactor = OMEGA_PREFACTORS[level] * tau ** (level - 1)
        for ascending in combinations_with_replacement(range(len(gates)), level):
            indices = ascending[::-1]
            weight = occupation_weight(indices)
            tally[weight] += 1
            for mask in product((False, True), repeat=level):
                grade = (level - 1) + sum(mask)
                if grade > order:
                    continue
                slots = [noisy[j] if use_noise else ideal[j] for j, use_noise in zip(indices, mask)]
                if any(slot is None for slot in slots):
                    continue
                for term in _nested_brackets(slots):
                    if term is not None:
                        terms[grade] += (prefactor / weight) * term.matrix
        multiplicities[level] = dict(tally)
    logger.debug(f'Magnus expansion to order {order} over {len(gates)} gates on {n_sites} qubits')
    return MagnusResult(tuple(SuperOp(term) for term in terms), tau, r, order, multiplicities)


def reduce_to_site(two_site, partner_state):
    """
    Single-site map rho -> Tr_partner[S(rho kron sigma)] of a two-site map S.

    The target is the first factor of S's support.
    """
    columns = []
    for k in range(4):
        unit = devectorize(np.eye(4)[k])
        image = two_site.apply(np.kron(unit, partner_state))
        columns.append(vectorize(partial_trace(image, [0], 2)))
    return SuperOp(np.array(columns).T)


def _bond_schedule(spec, noise, r):
    """The three bond gates of a single bond, in schedule order, on sites (0, 1)."""
    gates = []
    for axis in AXES:
        gate = GateGenerator(len(gates), 'bond', (0, 1), 'column',
                             bond_generator(spec.coupling(axis), axis), axis=axis)
        gates.append(gate if noise is None else gate.with_noise(noise, r))
    return tuple(gates)


class MeanFieldReduction:
    """
    Single-site reduction of the effective Lindbladian at mean field s.

    Every site takes part in ``coordination`` bonds of three gates each, and
    each bond partner is replaced by the product state with Bloch vector s.
    With magnus_order=1 the bond generators (Hamiltonian plus r E) are traced
    over the partner. magnus_order=2 reduces the order-2 effective generator
    of one bond's three gates instead, which adds their tau and tau r
    commutator terms.

    The reduction is affine in s, so the four pieces are built once and
    ``generator(s)`` only combines them.
    """

    def __init__(self, spec, noise=None, r=0.0, coordination=4, magnus_order=1, tau=0.01):
        if magnus_order not in (1, 2):
            raise ValidationError(
                f'Mean-field reduction supports Magnus orders 1 and 2, got {magnus_order}.'
            )
        self.spec = spec
        self.noise = noise
        self.r = r
        self.coordination = coordination
        self.magnus_order = magnus_order
        bond_gates = _bond_schedule(spec, noise, r)
        if magnus_order == 1:
            two_site = sum((gate.generator() for gate in bond_gates), SuperOp.zero(4))
        else:
            two_site = magnus_effective(bond_gates, tau, order=2, n_sites=2).total
        site_gate = GateGenerator(0, 'dissipator', (0,), 'dissipation', decay_generator(spec.gamma))
        if noise is not None:
            site_gate = site_gate.with_noise(noise, r)
        self.constant = (
            coordination * reduce_to_site(two_site, 0.5 * PAULI_MATRICES['I'])
            + site_gate.generator()
        ).matrix
        self.linear = [
            coordination * reduce_to_site(two_site, 0.5 * PAULI_MATRICES[axis.upper()]).matrix
            for axis in AXES
        ]

    def generator(self, s):
        matrix = self.constant + sum(value * piece for value, piece in zip(s, self.linear))
        return SuperOp(matrix)


def mean_field_generator(spec, s, noise=None, r=0.0, coordination=4, magnus_order=1, tau=0.01):
    """4 x 4 generator of one site at mean field s (see MeanFieldReduction)."""
    reduction = MeanFieldReduction(spec, noise, r, coordination, magnus_order, tau)
    return reduction.generator(s)


def mean_field_hamiltonian(spec, s, coordination=4):
    """H_MF = sum_a z J_a s_a sigma^a."""
    return sum(
        coordination * spec.coupling(axis) * value * PAULI_MATRICES[axis.upper()]
        for axis, value in zip(AXES, s)
    )
