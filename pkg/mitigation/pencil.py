"""
Matrix-pencil extraction of decay rates from uniformly sampled series, and
zero-noise extrapolation of the extracted rates.

A series s(t_k) = sum_a A_a exp(i theta_a) z_a^k with z_a = exp(lambda_a dt)
makes the Hankel matrix Y[i, j] = s_(i+j) of rank p. The z_a are the
eigenvalues of the pencil formed by the dominant right singular vectors
with the first and last rows dropped.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from scipy.linalg import hankel

from hilbert.exceptions import RankCollapseError
from spectral.decomposition import match_eigenvalues

from .richardson import extrapolate_to_zero

logger = logging.getLogger(__name__)

GROWTH_TOL = 1e-8
CLIP_TOL = 1e-6
ALIASING_FRACTION = 0.9


def singular_value_threshold():
    return getattr(settings, 'SIMULATION_DEFAULTS', {}).get('PENCIL_SV_THRESHOLD', 1e-8)


@dataclass(frozen=True)
class ExponentialMode:
    amplitude: float
    phase: float
    rate: complex

    def as_record(self):
        return {
            'amplitude': self.amplitude,
            'phase': self.phase,
            'rate': [self.rate.real, self.rate.imag],
        }


@dataclass(frozen=True, eq=False)
class ExponentialModel:
    """
    s(t) = sum_a A_a exp(i theta_a) exp(lambda_a (t - t0)).

    Modes are sorted by decreasing real part of lambda, so the slowest
    (steady-state) mode comes first.
    """

    modes: tuple
    dt: float
    t0: float = 0.0
    residual: float = 0.0
    singular_values: np.ndarray = field(default=None, repr=False)
    aliased: bool = False

    @property
    def count(self):
        return len(self.modes)

    @property
    def rates(self):
        return np.array([mode.rate for mode in self.modes], dtype=complex)

    def evaluate(self, times):
        times = np.asarray(times, dtype=float) - self.t0
        total = np.zeros(times.shape, dtype=complex)
        for mode in self.modes:
            total += mode.amplitude * np.exp(1j * mode.phase) * np.exp(mode.rate * times)
        return total

    def as_record(self):
        return {
            'dt': self.dt,
            't0': self.t0,
            'residual': self.residual,
            'aliased': self.aliased,
            'modes': [mode.as_record() for mode in self.modes],
        }


def synthesize(model, times, real=True):
    """Samples of the model at ``times`` (real part only by default)."""
    values = model.evaluate(times)
    return values.real if real else values


def _fit_amplitudes(samples, poles):
    vandermonde = np.vander(poles, samples.size, increasing=True).T
    coefficients, *_ = np.linalg.lstsq(vandermonde, samples, rcond=None)
    return coefficients, vandermonde


def matrix_pencil(series, p=None, pencil=None, threshold=None):
    """
    Fit a sum of damped complex exponentials to a uniformly sampled series.

    Args:
        series: TimeSeries (or anything with ``times``, ``values`` and ``dt``)
        p: number of modes; decided from the singular values when None
        pencil: pencil parameter, floor(N / 3) by default
        threshold: relative singular-value cut used when p is None

    Returns:
        ExponentialModel

    Raises:
        RankCollapseError: the series is too short or carries fewer modes than p
    """
    samples = np.asarray(series.values, dtype=complex)
    n_samples = samples.size
    dt = series.dt
    pencil = n_samples // 3 if pencil is None else int(pencil)
    threshold = singular_value_threshold() if threshold is None else threshold
    if pencil < 1 or n_samples - pencil < 1:
        raise RankCollapseError(f'{n_samples} samples cannot support pencil parameter {pencil}.')
    if p is not None and n_samples < 2 * p + pencil:
        raise RankCollapseError(
            f'{n_samples} samples are too few for {p} modes with pencil parameter {pencil}.'
        )

    data = hankel(samples[:n_samples - pencil], samples[n_samples - pencil - 1:])
    _, singular_values, vh = np.linalg.svd(data, full_matrices=False)
    if singular_values[0] == 0:
        raise RankCollapseError('The series is identically zero.')
    numerical_rank = int(np.count_nonzero(singular_values > threshold * singular_values[0]))
    if p is None:
        p = numerical_rank
    elif p > numerical_rank or p > min(pencil, n_samples - pencil):
        raise RankCollapseError(
            f'Requested {p} modes but the series carries only {numerical_rank} '
            f'above the {threshold:.0e} singular-value threshold.'
        )

    basis = vh[:p].T
    poles = np.linalg.eigvals(np.linalg.pinv(basis[:-1]) @ basis[1:])
    rates = np.log(poles.astype(complex)) / dt

    nyquist = np.pi / dt
    aliased = bool(np.any(np.abs(rates.imag) > ALIASING_FRACTION * nyquist))
    if aliased:
        logger.warning(
            f'Extracted frequencies reach {np.max(np.abs(rates.imag)):.4g}, close to the '
            f'Nyquist limit {nyquist:.4g}; sample more densely'
        )
    growing = rates.real > GROWTH_TOL
    if growing.any():
        logger.warning(f'Dropping {np.count_nonzero(growing)} growing modes (Re lambda > {GROWTH_TOL:.0e})')
        poles, rates = poles[~growing], rates[~growing]

    coefficients, vandermonde = _fit_amplitudes(samples, poles)
    reconstruction = vandermonde @ coefficients
    scale = max(float(np.linalg.norm(samples)), np.finfo(float).tiny)
    residual = float(np.linalg.norm(reconstruction - samples) / scale)

    modes = [
        ExponentialMode(float(abs(c)), float(np.angle(c) % (2 * np.pi)), complex(rate))
        for c, rate in zip(coefficients, rates)
    ]
    modes.sort(key=lambda mode: (-mode.rate.real, -mode.rate.imag))
    logger.debug(f'Matrix pencil: {len(modes)} modes from {n_samples} samples, residual {residual:.2e}')
    return ExponentialModel(
        tuple(modes), dt, float(series.times[0]), residual, singular_values, aliased
    )


@dataclass(frozen=True, eq=False)
class SpectrumExtrapolation:
    """
    Zero-noise eigenvalues of modes paired across noise strengths.

    ``tracks`` holds, per extrapolated eigenvalue, the matched rate at every
    noise strength in ``rs``.
    """

    rs: tuple
    eigenvalues: np.ndarray
    tracks: list
    unmatched: dict
    ambiguous: int = 0
    clipped: list = field(default_factory=list)

    def as_record(self):
        return {
            'rs': list(self.rs),
            'eigenvalues': [[value.real, value.imag] for value in self.eigenvalues],
            'tracks': [[[v.real, v.imag] for v in track] for track in self.tracks],
            'unmatched': {str(r): [[v.real, v.imag] for v in values] for r, values in self.unmatched.items()},
            'ambiguous': self.ambiguous,
            'clipped': list(self.clipped),
        }


def _rates(model):
    return model.rates if isinstance(model, ExponentialModel) else np.asarray(model, dtype=complex)


def extrapolate_spectrum(models, rs, radius=np.inf, order=1):
    """
    Pair modes across noise strengths and extrapolate each pair to r = 0.

    Every model is matched against the first (lowest r) by nearest distance
    with conjugate pairs kept together; only modes found at every r are
    extrapolated. Extrapolated values with Re > 1e-6 are clipped to the
    imaginary axis and flagged.

    Returns:
        SpectrumExtrapolation
    """
    if len(models) != len(rs):
        raise ValidationError(f'{len(models)} models but {len(rs)} noise strengths.')
    if len(set(rs)) != len(rs):
        raise ValidationError('Noise strengths must be distinct.')
    order_of = np.argsort(rs)
    rs = [float(rs[i]) for i in order_of]
    rates = [_rates(models[i]) for i in order_of]

    reference = rates[0]
    partners = {index: [value] for index, value in enumerate(reference)}
    unmatched = {}
    ambiguous = 0
    for r, candidates in zip(rs[1:], rates[1:]):
        report = match_eigenvalues(reference, candidates, radius=radius)
        ambiguous += len(report.ambiguous)
        found = {match.reference: candidates[match.candidate] for match in report.matches}
        for index in list(partners):
            if index in found:
                partners[index].append(found[index])
            else:
                partners.pop(index)
        unmatched[r] = [candidates[j] for j in report.unmatched_candidates]
    unmatched[rs[0]] = [reference[i] for i in range(reference.size) if i not in partners]

    tracks = [partners[index] for index in sorted(partners)]
    eigenvalues, clipped = [], []
    for position, track in enumerate(tracks):
        value = complex(extrapolate_to_zero(rs, np.array(track), order))
        if value.real > CLIP_TOL:
            clipped.append(position)
            value = complex(0.0, value.imag)
        eigenvalues.append(value)
    if clipped:
        logger.warning(f'{len(clipped)} extrapolated eigenvalues had Re > {CLIP_TOL:.0e} and were clipped')
    if ambiguous:
        logger.warning(f'{ambiguous} ambiguous mode pairings across noise strengths')
    logger.info(f'Extrapolated {len(eigenvalues)} eigenvalues from r={rs}')
    return SpectrumExtrapolation(
        tuple(rs), np.array(eigenvalues, dtype=complex), tracks, unmatched, ambiguous, clipped
    )
