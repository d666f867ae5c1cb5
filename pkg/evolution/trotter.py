"""
Noisy Trotterized propagation of lattice density matrices.

Each gate is applied as the channel exp(r E tau) exp(G_id tau) on its
support through the local-channel kernel, so the full superoperator is
never formed on the propagation path.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from scipy.linalg import logm

from hilbert.channels import LocalChannel, state_tensor, tensor_to_matrix
from hilbert.operators import DensityMatrix, as_matrix, check_state, qubit_count, trace_distance
from hilbert.superoperators import SuperOp, embed_superoperator
from noise.generators import attach_noise
from xyz_model.model import DENSE_QUBIT_LIMIT

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvolutionConfig:
    """
    Step size, noise strength and stopping rules of one propagation.

    ``tau = 0`` is accepted for single steps (the identity map) but not for
    runs to the steady state.
    """

    tau: float = 0.01
    r: float = 0.0
    max_time: float = 50.0
    tolerance: float = 1e-7
    record_stride: int = 10
    probe_window: float = 1.0
    r_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tau < 0:
            raise ValidationError(f'Time step must be non-negative, got {self.tau}.')
        if self.tolerance <= 0:
            raise ValidationError(f'Convergence tolerance must be positive, got {self.tolerance}.')
        if self.r < 0:
            raise ValidationError(f'Noise strength must be non-negative, got {self.r}.')
        if self.record_stride < 1:
            raise ValidationError(f'Record stride must be at least 1, got {self.record_stride}.')
        if self.max_time <= 0 or self.probe_window <= 0:
            raise ValidationError('max_time and probe_window must be positive.')

    @classmethod
    def from_settings(cls, **overrides):
        defaults = getattr(settings, 'SIMULATION_DEFAULTS', {})
        values = {
            'tau': defaults.get('TAU', 0.01),
            'max_time': defaults.get('MAX_TIME', 50.0),
            'tolerance': defaults.get('STEADY_TOLERANCE', 1e-7),
            'record_stride': defaults.get('RECORD_STRIDE', 10),
            'probe_window': defaults.get('PROBE_WINDOW', 1.0),
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def with_r(self, r):
        return replace(self, r=r)

    @property
    def max_steps(self):
        return int(round(self.max_time / self.tau))

    @property
    def window_steps(self):
        return max(1, int(round(self.probe_window / self.tau)))


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values)
        if times.shape != values.shape or times.ndim != 1:
            raise ValidationError(
                f'Times and values must be 1-d of equal length, got {times.shape} and {values.shape}.'
            )
        if times.size > 1 and np.any(np.diff(times) <= 0):
            raise ValidationError('Sample times must be strictly increasing.')
        object.__setattr__(self, 'times', times)
        object.__setattr__(self, 'values', values)

    def __len__(self):
        return self.times.size

    @property
    def dt(self):
        """Sampling interval; raises if the grid is not uniform."""
        steps = np.diff(self.times)
        if steps.size == 0:
            raise ValidationError('A single sample has no sampling interval.')
        if np.max(np.abs(steps - steps[0])) > 1e-9 * max(1.0, abs(steps[0])):
            raise ValidationError('Time series is not uniformly sampled.')
        return float(steps[0])


@dataclass(frozen=True)
class SteadyStateResult:
    rho: DensityMatrix
    steps: int
    residual: float
    converged: bool


def noisy_schedule(schedule, noise, cfg):
    """Attach ``noise`` at strength cfg.r (and cfg.r_overrides) to every gate."""
    return attach_noise(schedule, noise, cfg.r, cfg.r_overrides)


def gate_channel(gate, tau, ideal=None):
    """The channel exp(r E tau) exp(G_id tau) of one gate."""
    ideal = gate.ideal.exp(tau) if ideal is None else ideal
    if gate.noise is None or gate.r == 0:
        return ideal
    return (gate.r * gate.noise_generator()).exp(tau) @ ideal


class TrotterPropagator:
    """
    A schedule compiled into local channels for a fixed step size.
    """

    def __init__(self, schedule, tau):
        self.schedule = tuple(schedule)
        self.tau = tau
        self.n_sites = 1 + max(max(gate.sites) for gate in self.schedule) if self.schedule else 0
        ideal_cache = {}
        channels = []
        for gate in self.schedule:
            key = id(gate.ideal)
            if key not in ideal_cache:
                ideal_cache[key] = gate.ideal.exp(tau)
            ideal = ideal_cache[key]
            physical = gate.noise is None or getattr(gate.noise, 'physical', True)
            superop = gate_channel(gate, tau, ideal)
            channels.append(LocalChannel(superop, gate.sites, label=gate.label, check=physical))
        self.channels = tuple(channels)

    def step_tensor(self, tensor, n_sites):
        for channel in self.channels:
            tensor = channel.apply_to_tensor(tensor, n_sites)
        return tensor

    def step(self, rho, steps=1):
        matrix = as_matrix(rho)
        n_sites = qubit_count(matrix.shape[0])
        if n_sites < self.n_sites:
            raise ValidationError(
                f'Schedule touches {self.n_sites} sites but the state has {n_sites}.'
            )
        tensor = state_tensor(matrix)
        for _ in range(steps):
            tensor = self.step_tensor(tensor, n_sites)
        return np.ascontiguousarray(tensor_to_matrix(tensor))


def trotter_step(rho, schedule, cfg):
    """
    One noisy Trotter step applied to a state.

    Returns:
        DensityMatrix: the validated output state
    """
    propagator = TrotterPropagator(schedule, cfg.tau)
    return DensityMatrix(propagator.step(rho))


def _require_running(cfg):
    if cfg.tau <= 0:
        raise ValidationError('Propagation to the steady state needs tau > 0.')


def evolve_to_steady(rho_in, schedule, cfg, propagator=None):
    """
    Iterate Trotter steps until states one probe window apart agree.

    Convergence is declared when the trace distance between the state now
    and one window earlier drops below cfg.tolerance. Reaching max_time
    first is reported through ``converged=False``.

    Returns:
        SteadyStateResult
    """
    _require_running(cfg)
    propagator = propagator or TrotterPropagator(schedule, cfg.tau)
    window = cfg.window_steps
    current = as_matrix(rho_in)
    steps = 0
    residual = float('inf')
    while steps < cfg.max_steps:
        chunk = min(window, cfg.max_steps - steps)
        following = propagator.step(current, chunk)
        steps += chunk
        residual = trace_distance(following, current)
        current = following
        if chunk == window and residual < cfg.tolerance:
            break
    converged = residual < cfg.tolerance
    if converged:
        logger.info(f'Steady state after {steps} steps (t={steps * cfg.tau:.2f}), residual {residual:.3e}')
    else:
        logger.warning(
            f'No steady state within T={cfg.max_time}: residual {residual:.3e} '
            f'above tolerance {cfg.tolerance:.1e}'
        )
    check_state(current)
    return SteadyStateResult(DensityMatrix(current, validate=False), steps, residual, converged)


def record_trajectory(rho_in, schedule, cfg, observable, stop_at_steady=True, metadata=None):
    """
    Sample Tr[O rho(t)] every cfg.record_stride steps.

    Sampling stops at max_time, or once the state has stopped moving over a
    probe window when ``stop_at_steady`` is set.
    """
    _require_running(cfg)
    propagator = TrotterPropagator(schedule, cfg.tau)
    operator = as_matrix(observable)
    stride = cfg.record_stride
    window_samples = max(1, int(round(cfg.window_steps / stride)))
    current = as_matrix(rho_in)
    states = [current]
    times, values = [0.0], [np.einsum('ij,ji->', operator, current).real]
    steps = 0
    while steps + stride <= cfg.max_steps:
        current = propagator.step(current, stride)
        steps += stride
        times.append(steps * cfg.tau)
        values.append(np.einsum('ij,ji->', operator, current).real)
        if stop_at_steady:
            states.append(current)
            if len(states) > window_samples:
                previous = states.pop(0)
                if trace_distance(current, previous) < cfg.tolerance:
                    break
    meta = {'tau': cfg.tau, 'r': cfg.r, 'stride': stride}
    meta.update(metadata or {})
    return TimeSeries(np.array(times), np.array(values), meta)


def step_superoperator(schedule, cfg, n_sites=None):
    """
    Dense matrix of one noisy Trotter step (at most DENSE_QUBIT_LIMIT qubits).
    """
    n_sites = n_sites or 1 + max(max(gate.sites) for gate in schedule)
    if n_sites > DENSE_QUBIT_LIMIT:
        raise ValidationError(
            f'Dense step superoperators are limited to {DENSE_QUBIT_LIMIT} qubits, got {n_sites}.'
        )
    total = SuperOp.identity(2 ** n_sites)
    for gate in schedule:
        total = embed_superoperator(gate_channel(gate, cfg.tau), gate.sites, n_sites) @ total
    return total


def effective_lindbladian(schedule, cfg, n_sites=None):
    """log(step) / tau, the exact generator of one noisy Trotter step."""
    _require_running(cfg)
    step = step_superoperator(schedule, cfg, n_sites)
    generator = logm(step.matrix)
    return SuperOp(np.asarray(generator, dtype=complex) / cfg.tau)


def random_initial_state(lattice, seed):
    n_sites = getattr(lattice, 'n_sites', lattice)
    return DensityMatrix.random(n_sites, np.random.default_rng(seed))
