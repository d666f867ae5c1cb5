"""
Mean-field phase curves in g or r and location of the critical point.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.core.exceptions import ValidationError

from hilbert.exceptions import NumericalError
from mitigation.scaling import fit_scaling, scaling_window

from .dynamics import (
    BROKEN_SEED,
    SYMMETRIC_SEED,
    MeanFieldModel,
    steady_from_seeds,
)

logger = logging.getLogger(__name__)

SWEEP_AXES = (
    ('g', 'Anisotropy g'),
    ('r', 'Noise strength r'),
)
BISECTION_TOL = 1e-7
REFINE_POINTS = 12


def _parameters(axis, value, fixed):
    if axis not in dict(SWEEP_AXES):
        raise ValidationError(f'Unknown sweep axis {axis!r}; expected g or r.')
    return (value, fixed) if axis == 'g' else (fixed, value)


@dataclass(frozen=True, eq=False)
class PhaseCurve:
    """
    Stable mean-field fixed points along one parameter axis.

    ``states`` holds a MeanFieldState per grid point, or None where the point
    failed; the failure messages are kept in ``failures`` by point index.
    """

    axis: str
    values: np.ndarray
    states: tuple
    fixed: float
    noise: object = None
    failures: dict = field(default_factory=dict)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if len(self.states) != values.size:
            raise ValidationError(
                f'{values.size} grid values but {len(self.states)} states.'
            )
        object.__setattr__(self, 'values', values)

    @property
    def g(self):
        return self.values if self.axis == 'g' else np.full(self.values.size, self.fixed)

    @property
    def r(self):
        """Noise strength of a g-sweep (None for an r-sweep)."""
        return self.fixed if self.axis == 'g' else None

    @property
    def order_parameters(self):
        return np.array([np.nan if state is None else state.order_parameter for state in self.states])

    @property
    def phases(self):
        return [None if state is None else state.phase for state in self.states]

    @property
    def symmetric_noise(self):
        return self.noise is None or getattr(self.noise, 'symmetric', True)

    def transition_index(self):
        """Index of the first grid point whose phase differs from the first point's."""
        phases = self.phases
        first = next((phase for phase in phases if phase is not None), None)
        for index, phase in enumerate(phases):
            if phase is not None and phase != first:
                return index
        return None

    def as_rows(self):
        rows = []
        for index, (value, state) in enumerate(zip(self.values, self.states)):
            g, r = _parameters(self.axis, float(value), self.fixed)
            row = {'index': index, 'g': g, 'r': r}
            if state is None:
                row.update(status='failed', error=self.failures.get(index, ''))
            else:
                row.update(
                    status='ok', sx=state.sx, sy=state.sy, sz=state.sz,
                    phase=state.phase, stable=state.stable, converged=state.converged,
                    limit_cycle=state.limit_cycle,
                )
            rows.append(row)
        return rows


def _monotone(values):
    steps = np.diff(values)
    if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValidationError('Sweep grid must be strictly monotone.')


def sweep(axis, values, spec, noise=None, fixed=0.0, warm_start=True, **options):
    """
    Stable mean-field fixed points over a monotone grid of g or r.

    Each point is seeded from the previous point's fixed point (when
    ``warm_start``) as well as from the symmetry-broken and symmetric seeds.
    A point that fails is logged and recorded; the sweep carries on.

    Returns:
        PhaseCurve
    """
    values = np.asarray(values, dtype=float)
    _monotone(values)
    _parameters(axis, 0.0, fixed)
    states, failures = [], {}
    previous = None
    for index, value in enumerate(values):
        g, r = _parameters(axis, float(value), fixed)
        seeds = [BROKEN_SEED, SYMMETRIC_SEED]
        if warm_start and previous is not None:
            seeds.insert(0, previous.s)
        try:
            model = MeanFieldModel(spec.with_g(g), noise, r, **options)
            state = steady_from_seeds(model, seeds)
        except (NumericalError, ValidationError, np.linalg.LinAlgError) as exc:
            logger.error(f'Mean-field point {index} (g={g}, r={r}) failed: {exc}')
            states.append(None)
            failures[index] = str(exc)
            continue
        states.append(state)
        previous = state
    curve = PhaseCurve(axis, values, tuple(states), fixed, noise, failures)
    transition = curve.transition_index()
    if transition is None:
        logger.info(f'{axis}-sweep over {values.size} points: no transition')
    else:
        logger.info(f'{axis}-sweep over {values.size} points: transition near {axis}={values[transition]:.6g}')
    return curve


def is_ordered(state):
    """FM, or a paramagnetic fixed point that has lost stability."""
    return not state.paramagnetic or not state.stable


@dataclass(frozen=True)
class CriticalPoint:
    axis: str
    value: float
    bisection_value: float
    bracket: tuple
    fit: object = None

    @property
    def beta(self):
        return None if self.fit is None else self.fit.beta


def critical_point(axis, spec, bracket, noise=None, fixed=0.0, tol=BISECTION_TOL,
                   refine=True, window=None, **options):
    """
    Locate the PM/FM transition along ``axis`` inside ``bracket``.

    Bisection on whether the stable branch is ordered, then (with ``refine``)
    a power-law fit of the order parameter on the ordered side whose
    intercept becomes the reported value.

    Raises:
        ValidationError: both bracket ends lie in the same phase
    """
    def ordered_at(value, seeds=(BROKEN_SEED, SYMMETRIC_SEED)):
        g, r = _parameters(axis, value, fixed)
        model = MeanFieldModel(spec.with_g(g), noise, r, **options)
        return steady_from_seeds(model, seeds)

    lo, hi = sorted(float(v) for v in bracket)
    lo_ordered, hi_ordered = is_ordered(ordered_at(lo)), is_ordered(ordered_at(hi))
    if lo_ordered == hi_ordered:
        raise ValidationError(
            f'No transition in {axis} bracket [{lo}, {hi}]: both ends are '
            f'{"ordered" if lo_ordered else "paramagnetic"}.'
        )
    while hi - lo > tol:
        middle = 0.5 * (lo + hi)
        if is_ordered(ordered_at(middle)) == lo_ordered:
            lo = middle
        else:
            hi = middle
    estimate = 0.5 * (lo + hi)
    logger.info(f'Mean-field critical {axis} by bisection: {estimate:.8f}')
    if not refine:
        return CriticalPoint(axis, estimate, estimate, tuple(bracket))

    side = 1 if hi_ordered else -1
    w_min, w_max = scaling_window(window)
    distances = np.geomspace(w_min, w_max, REFINE_POINTS)[::-1]
    points = estimate + side * distances
    points = points[(points >= min(bracket)) & (points <= max(bracket)) & (points >= 0)]
    order_parameters, previous = [], None
    for point in points:
        seeds = (BROKEN_SEED,) if previous is None else (previous.s, BROKEN_SEED)
        previous = ordered_at(float(point), seeds)
        order_parameters.append(previous.order_parameter)
    fit = fit_scaling(
        points, order_parameters, side=side, window=(w_min, w_max),
        critical_guess=estimate, r=fixed if axis == 'g' else 0.0,
    )
    logger.info(f'Power-law refinement: {axis}_cri={fit.critical:.8f}, beta={fit.beta:.4f}')
    return CriticalPoint(axis, fit.critical, estimate, tuple(bracket), fit)
