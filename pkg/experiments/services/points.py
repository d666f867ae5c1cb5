"""
Per-point computations of every experiment kind.

Each handler takes the validated ExperimentConfig, a point index and the
swept value, and returns a flat dict of plain Python values. Failures of a
single point come back as a record with status 'failed' so that a sweep
always runs to the end.
"""

import logging

import numpy as np
from django.core.exceptions import ValidationError

from evolution.trotter import (
    effective_lindbladian,
    evolve_to_steady,
    noisy_schedule,
    random_initial_state,
    record_trajectory,
    step_superoperator,
)
from hilbert.exceptions import NumericalError
from hilbert.operators import PAULI_MATRICES, embed_local
from meanfield.phase import sweep
from mitigation.pencil import extrapolate_spectrum, matrix_pencil
from mitigation.richardson import NoisyObservations, extrapolate_to_zero, richardson
from mitigation.scaling import fit_scaling, select_ansatz
from spectral.decomposition import spectrum, steady_state_of_channel
from xyz_model.model import build_xyz
from xyz_model.observables import all_down_state, magnetization, order_parameter

logger = logging.getLogger(__name__)

POINT_FAILURES = (NumericalError, ValidationError, np.linalg.LinAlgError)
ORACLE_SITE_LIMIT = 4
EXACT_EIGENVALUES = 8
GAP_TOL = 1e-6


def error_text(exc):
    if isinstance(exc, ValidationError):
        return f'{type(exc).__name__}: {"; ".join(exc.messages)}'
    return f'{type(exc).__name__}: {exc}'


def failed_record(index, exc, **fields):
    logger.error(f'Point {index} failed: {error_text(exc)}')
    return {'index': index, **fields, 'status': 'failed', 'error': error_text(exc)}


def complex_pairs(values):
    return [[float(value.real), float(value.imag)] for value in np.asarray(values, dtype=complex)]


def from_pairs(pairs):
    return np.array([complex(re, im) for re, im in pairs], dtype=complex)


def slowest_gap(eigenvalues):
    """Smallest -Re(lambda) among decaying modes, or None."""
    values = np.asarray(eigenvalues, dtype=complex)
    decaying = -values.real[values.real < -GAP_TOL]
    return float(decaying.min()) if decaying.size else None


def _steady(config, g, r):
    spec = config.model_spec(g)
    schedule, _ = build_xyz(spec)
    cfg = config.evolution_config(r)
    result = evolve_to_steady(
        all_down_state(spec.lattice), noisy_schedule(schedule, config.noise_model(), cfg), cfg
    )
    return spec, result


def _oracle_magnetization(config, g, r):
    """M of the fixed point of the dense one-step channel (small lattices only)."""
    spec = config.model_spec(g)
    if spec.lattice.n_sites > ORACLE_SITE_LIMIT:
        return None
    schedule, _ = build_xyz(spec)
    cfg = config.evolution_config(r)
    channel = step_superoperator(noisy_schedule(schedule, config.noise_model(), cfg), cfg)
    return magnetization(steady_state_of_channel(channel), spec.lattice)


def steady_state_point(config, index, r):
    try:
        spec, result = _steady(config, config.g, r)
        return {
            'index': index,
            'g': config.g,
            'r': r,
            'M': magnetization(result.rho, spec.lattice),
            'm': order_parameter(result.rho, spec.lattice),
            'M_oracle': _oracle_magnetization(config, config.g, r),
            'steps': result.steps,
            'residual': result.residual,
            'converged': result.converged,
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, g=config.g, r=r)


def g_sweep_point(config, index, g):
    """
    M at every boosted noise strength, its zero-noise extrapolation M_ex
    and, on small lattices, the noiseless Trotter oracle M0.
    """
    try:
        boosted, ordered, converged = [], [], []
        for r in config.boosted_rs:
            spec, result = _steady(config, g, r)
            boosted.append(magnetization(result.rho, spec.lattice))
            ordered.append(order_parameter(result.rho, spec.lattice))
            converged.append(result.converged)
        observations = NoisyObservations.from_boosts(config.r0, config.boosts, boosted, g=g)
        extrapolated = richardson(observations, config.order)
        return {
            'index': index,
            'g': g,
            'r': config.boosted_rs[0],
            'M': boosted[0],
            'm': ordered[0],
            'M_ex': extrapolated.estimate,
            'M0': _oracle_magnetization(config, g, 0.0),
            'fit_residual': extrapolated.residual,
            'M_boosted': boosted,
            'converged': all(converged),
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, g=g, r=config.r0)


def r_sweep_point(config, index, r):
    try:
        spec, result = _steady(config, config.g, r)
        return {
            'index': index,
            'g': config.g,
            'r': r,
            'M': magnetization(result.rho, spec.lattice),
            'm': order_parameter(result.rho, spec.lattice),
            'steps': result.steps,
            'converged': result.converged,
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, g=config.g, r=r)


def spectroscopy_observable(config, lattice):
    local = sum(PAULI_MATRICES[axis.upper()] for axis in config.observable.split('+'))
    return embed_local(local, (config.site,), lattice)


def spectroscopy_point(config, index, r):
    """
    Matrix-pencil rates of one noisy trajectory from a seeded random state.
    """
    try:
        spec = config.model_spec()
        schedule, _ = build_xyz(spec)
        cfg = config.evolution_config(r)
        series = record_trajectory(
            random_initial_state(spec.lattice, config.seed),
            noisy_schedule(schedule, config.noise_model(), cfg),
            cfg,
            spectroscopy_observable(config, spec.lattice),
            stop_at_steady=False,
            metadata={'g': config.g, 'seed': config.seed, 'observable': config.observable},
        )
        model = matrix_pencil(series, p=config.modes)
        return {
            'index': index,
            'g': config.g,
            'r': r,
            'gap': slowest_gap(model.rates),
            'n_modes': model.count,
            'fit_residual': model.residual,
            'aliased': model.aliased,
            'eigenvalues': complex_pairs(model.rates),
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, g=config.g, r=r)


def spectroscopy_summary(config, records):
    """
    Zero-noise eigenvalues from the per-r records, plus the exact spectrum
    of the noiseless step generator on small lattices.
    """
    index = len(records)
    usable = [record for record in records if record['status'] == 'ok']
    try:
        if len(usable) < config.order + 1:
            raise ValidationError(
                f'Only {len(usable)} noise strengths were fitted; order {config.order} needs {config.order + 1}.'
            )
        result = extrapolate_spectrum(
            [from_pairs(record['eigenvalues']) for record in usable],
            [record['r'] for record in usable],
            order=config.order,
        )
        summary = {
            'index': index,
            'g': config.g,
            'r': 0.0,
            'gap': slowest_gap(result.eigenvalues),
            'n_modes': len(result.eigenvalues),
            'eigenvalues': complex_pairs(result.eigenvalues),
            'clipped': len(result.clipped),
            'ambiguous': result.ambiguous,
            'status': 'ok',
        }
        spec = config.model_spec()
        if spec.lattice.n_sites <= ORACLE_SITE_LIMIT:
            schedule, _ = build_xyz(spec)
            exact = spectrum(effective_lindbladian(schedule, config.evolution_config(0.0))).eigenvalues
            summary['exact_gap'] = slowest_gap(exact)
            summary['exact_eigenvalues'] = complex_pairs(exact[:EXACT_EIGENVALUES])
        return summary
    except POINT_FAILURES as exc:
        return failed_record(index, exc, g=config.g, r=0.0)


def critical_point_point(config, index, r):
    """
    Scaling fit of one mean-field g-sweep at noise strength r.
    """
    try:
        curve = sweep(
            'g', config.g_values, config.model_spec(), config.noise_model(), fixed=r,
            **config.meanfield_options,
        )
        fit = fit_scaling(
            curve.values, curve.order_parameters, window=config.window,
            ansatz=select_ansatz(curve), r=r,
        )
        return {
            'index': index,
            'g': fit.critical,
            'r': r,
            'g_cri': fit.critical,
            'beta': fit.beta,
            'amplitude': fit.amplitude,
            'offset': fit.offset,
            'slope': fit.slope,
            'fit_residual': fit.residual,
            'n_points': fit.n_points,
            'ansatz': fit.ansatz,
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, r=r)


def critical_point_summary(config, records):
    index = len(records)
    usable = [record for record in records if record['status'] == 'ok']
    try:
        rs = [record['r'] for record in usable]
        critical = float(extrapolate_to_zero(rs, [record['g_cri'] for record in usable], config.order))
        beta = float(extrapolate_to_zero(rs, [record['beta'] for record in usable], config.order))
        logger.info(f'Critical point extrapolated from r={rs}: g_cri={critical:.6f}, beta={beta:.4f}')
        return {
            'index': index,
            'g': critical,
            'r': 0.0,
            'g_cri': critical,
            'beta': beta,
            'n_points': len(usable),
            'status': 'ok',
        }
    except POINT_FAILURES as exc:
        return failed_record(index, exc, r=0.0)


def meanfield_phase_records(config):
    """
    Mean-field sweep along whichever of g and r the config sweeps.

    The sweep runs in one process so each point warm-starts from the last.
    """
    axis, values = ('g', config.g_values) if config.g_values else ('r', config.r_values)
    fixed = config.r0 if axis == 'g' else config.g
    curve = sweep(axis, values, config.model_spec(), config.noise_model(), fixed=fixed,
                  **config.meanfield_options)
    records = []
    for row in curve.as_rows():
        record = {'index': row['index'], 'g': row['g'], 'r': row['r'], 'status': row['status']}
        if row['status'] == 'ok':
            record.update(
                M=row['sz'], m=abs(row['sx']), sx=row['sx'], sy=row['sy'], sz=row['sz'],
                phase=row['phase'], stable=row['stable'], converged=row['converged'],
                limit_cycle=row['limit_cycle'],
            )
        else:
            record['error'] = row['error']
        records.append(record)
    return records


POINT_HANDLERS = {
    'steady-state': steady_state_point,
    'g-sweep': g_sweep_point,
    'r-sweep': r_sweep_point,
    'spectroscopy': spectroscopy_point,
    'mitigate-critical-point': critical_point_point,
}

SUMMARY_HANDLERS = {
    'spectroscopy': spectroscopy_summary,
    'mitigate-critical-point': critical_point_summary,
}


def run_task(task):
    """Entry point for worker processes: ``task`` is (kind, config, index, value)."""
    kind, config, index, value = task
    return POINT_HANDLERS[kind](config, index, value)
