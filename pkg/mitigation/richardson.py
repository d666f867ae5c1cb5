"""
Zero-noise (Richardson) extrapolation of observables measured at boosted
noise strengths r_i = c_i r0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)

RICHARDSON_ORDERS = (1, 2)


def boost_factors():
    return tuple(getattr(settings, 'SIMULATION_DEFAULTS', {}).get('BOOST_FACTORS', (1.0, 1.5, 2.0)))


@dataclass(frozen=True)
class NoisyObservations:
    """
    Observable values at distinct positive noise strengths, sorted by r.
    """

    rs: tuple
    values: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rs = np.asarray(self.rs, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if rs.shape != values.shape or rs.ndim != 1:
            raise ValidationError(
                f'Noise strengths and values must be 1-d of equal length, got {rs.shape} and {values.shape}.'
            )
        if np.any(rs <= 0):
            raise ValidationError('Noise strengths must be positive.')
        if np.unique(rs).size != rs.size:
            raise ValidationError(f'Noise strengths must be distinct, got {rs.tolist()}.')
        order = np.argsort(rs)
        object.__setattr__(self, 'rs', tuple(rs[order].tolist()))
        object.__setattr__(self, 'values', tuple(values[order].tolist()))

    @classmethod
    def from_boosts(cls, r0, factors, values, **metadata):
        """Observations at r = c r0 for each boost factor c."""
        return cls(tuple(c * r0 for c in factors), tuple(values), dict(metadata, r0=r0))

    def __len__(self):
        return len(self.rs)


@dataclass(frozen=True)
class RichardsonResult:
    estimate: float
    coefficients: tuple
    residual: float
    order: int

    def as_record(self):
        return {
            'estimate': self.estimate,
            'coefficients': list(self.coefficients),
            'residual': self.residual,
            'order': self.order,
        }


def fit_polynomial(rs, values, order):
    """
    Least-squares polynomial in r of the given degree, highest power first.

    Raises:
        ValidationError: fewer than order + 1 points
    """
    rs = np.asarray(rs, dtype=float)
    values = np.asarray(values)
    if rs.size < order + 1:
        raise ValidationError(
            f'A degree-{order} extrapolation needs at least {order + 1} noise strengths, got {rs.size}.'
        )
    if np.iscomplexobj(values):
        return np.polyfit(rs, values.real, order) + 1j * np.polyfit(rs, values.imag, order)
    return np.polyfit(rs, values, order)


def extrapolate_to_zero(rs, values, order=1):
    """Value at r = 0 of the degree-``order`` fit (real or complex data)."""
    return fit_polynomial(rs, values, order)[-1]


def richardson(observations, order=1):
    """
    Zero-noise estimate from a polynomial fit in r.

    With two points and order 1 this is M0 = (c M(r0) - M(c r0)) / (c - 1),
    i.e. 2 M(r0) - M(2 r0) for c = 2.

    Returns:
        RichardsonResult
    """
    if order not in RICHARDSON_ORDERS:
        raise ValidationError(f'Richardson order must be 1 or 2, got {order}.')
    rs = np.asarray(observations.rs)
    values = np.asarray(observations.values)
    coefficients = fit_polynomial(rs, values, order)
    residual = float(np.max(np.abs(np.polyval(coefficients, rs) - values)))
    estimate = float(coefficients[-1])
    logger.debug(
        f'Richardson order {order} over r={list(observations.rs)}: estimate {estimate:.10g}'
    )
    return RichardsonResult(estimate, tuple(float(c) for c in coefficients), residual, order)
