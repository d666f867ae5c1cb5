"""
Local channel application on full-lattice density matrices.

A k-site channel is contracted into the row and column axes of the state
tensor of shape (2,) * 2n, so the 4^n x 4^n superoperator is never formed.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from .operators import DensityMatrix, as_matrix, contract_local, qubit_count, validate_sites
from .superoperators import SuperOp, require_cptp, superop_tensor

logger = logging.getLogger(__name__)

MAX_CHANNEL_SITES = 2


def state_tensor(rho):
    """View a 2^n x 2^n density matrix as a tensor with n row axes then n column axes."""
    matrix = as_matrix(rho)
    n_qubits = qubit_count(matrix.shape[0])
    return matrix.reshape((2,) * (2 * n_qubits))


def tensor_to_matrix(tensor):
    dim = int(round(np.sqrt(tensor.size)))
    return tensor.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class LocalChannel:
    """
    A channel on at most two sites, precompiled for repeated application.

    The CPTP check runs once at construction; ``check=False`` is reserved for
    deliberately unphysical experiments (signed noise mixtures).
    """

    superop: SuperOp
    sites: tuple
    label: str = ''
    check: bool = True
    tensor: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        superop = self.superop if isinstance(self.superop, SuperOp) else SuperOp(self.superop)
        sites = tuple(int(site) for site in self.sites)
        if len(sites) == 0 or len(sites) > MAX_CHANNEL_SITES:
            raise ValidationError(
                f'Local channels act on 1 or 2 sites, got {len(sites)} ({self.label or "unnamed"}).'
            )
        if superop.n_qubits != len(sites):
            raise ValidationError(
                f'Channel on {superop.n_qubits} qubits cannot act on sites {sites}.'
            )
        if self.check:
            require_cptp(superop, label=self.label or f'channel on {sites}')
        object.__setattr__(self, 'superop', superop)
        object.__setattr__(self, 'sites', sites)
        object.__setattr__(self, 'tensor', superop_tensor(superop))

    def then(self, other):
        """Channel applying self first, then other (same sites)."""
        if other.sites != self.sites:
            raise ValidationError(f'Cannot fuse channels on {self.sites} and {other.sites}.')
        return LocalChannel(other.superop @ self.superop, self.sites,
                            label=self.label, check=self.check and other.check)

    def apply_to_tensor(self, tensor, n_sites):
        validate_sites(self.sites, n_sites)
        axes = list(self.sites) + [n_sites + site for site in self.sites]
        return contract_local(self.tensor, tensor, axes)

    def apply(self, rho, validate=False):
        matrix = as_matrix(rho)
        n_sites = qubit_count(matrix.shape[0])
        result = self.apply_to_tensor(state_tensor(matrix), n_sites)
        return DensityMatrix(tensor_to_matrix(result), validate=validate)


def apply_local_channel(rho, channel, sites, validate=False):
    """
    Apply a CPTP map on 1 or 2 sites to a full-lattice state.

    Args:
        rho: DensityMatrix on n qubits
        channel: SuperOp (or its matrix) on len(sites) qubits
        sites: distinct target sites, factors in the channel's order
        validate: run the full state check on the output

    Returns:
        DensityMatrix: the transformed state

    Raises:
        ChannelNotCPTPError: if the channel fails the trace or Choi check
        ValidationError: bad sites or dimensions
    """
    return LocalChannel(channel, tuple(sites)).apply(rho, validate=validate)
