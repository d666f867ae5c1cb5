"""
Mean-field equations of motion of the noisy dissipative XYZ model.

All sites are assumed identical, so the lattice state is a product of one
qubit state rho(s) = (1 + s . sigma) / 2. The equations of motion are read
off the single-site effective generator L(s) built in evolution.magnus:

    ds_a/dt = Tr[sigma^a L(s) rho(s)]
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings
from scipy.integrate import solve_ivp

from evolution.magnus import MeanFieldReduction
from hilbert.operators import PAULI_MATRICES
from hilbert.superoperators import devectorize, vectorize

logger = logging.getLogger(__name__)

PARAMAGNETIC_TOL = 1e-6
BLOCH_SLACK = 1e-8
STATIONARY_TOL = 1e-12
HANDOFF_TOL = 1e-7
STABILITY_TOL = 1e-9
INTEGRATION_CHUNK = 20.0
TIME_BUDGET = 2000.0
RTOL = 1e-10
ATOL = 1e-12
BROKEN_SEED = (1e-3, 1e-3, -0.99)
SYMMETRIC_SEED = (0.0, 0.0, -0.99)

PAULI_VECTORS = [vectorize(PAULI_MATRICES[axis]) for axis in 'XYZ']


def coordination_default():
    return getattr(settings, 'SIMULATION_DEFAULTS', {}).get('COORDINATION', 4)


@dataclass(frozen=True)
class MeanFieldState:
    """
    Bloch vector of the common single-site state, with solver diagnostics.
    """

    s: tuple
    stable: bool = True
    converged: bool = True
    residual: float = 0.0
    jacobian_eigenvalues: tuple = field(default_factory=tuple)
    limit_cycle: bool = False

    @property
    def sx(self):
        return self.s[0]

    @property
    def sy(self):
        return self.s[1]

    @property
    def sz(self):
        return self.s[2]

    @property
    def order_parameter(self):
        return abs(self.s[0])

    @property
    def paramagnetic(self):
        return abs(self.s[0]) < PARAMAGNETIC_TOL and abs(self.s[1]) < PARAMAGNETIC_TOL

    @property
    def phase(self):
        return 'PM' if self.paramagnetic else 'FM'

    @property
    def bloch_norm(self):
        return float(np.linalg.norm(self.s))


class MeanFieldModel:
    """
    Single-site mean-field dynamics for one (model, noise, r) triple.

    Args:
        spec: ModelSpec (its lattice is ignored; only couplings are used)
        noise: NoiseModel or None
        r: noise strength
        coordination: number of bonds per site
        magnus_order: 1 (default) or 2 for the bond commutator terms
        tau: Trotter step entering the order-2 terms
    """

    def __init__(self, spec, noise=None, r=0.0, coordination=None, magnus_order=1, tau=0.01):
        self.spec = spec
        self.noise = noise
        self.r = r
        self.coordination = coordination_default() if coordination is None else coordination
        self.reduction = MeanFieldReduction(
            spec, noise, r, self.coordination, magnus_order=magnus_order, tau=tau
        )
        # ds_a/dt = c_a + sum_b C_ab s_b + sum_bc Q_abc s_b s_c
        half_identity = vectorize(0.5 * PAULI_MATRICES['I'])
        halves = [0.5 * vector for vector in PAULI_VECTORS]
        constant = self.reduction.constant
        linear = self.reduction.linear
        self._c = np.array([self._read(a, constant @ half_identity) for a in range(3)])
        self._C = np.array([
            [self._read(a, constant @ halves[b] + linear[b] @ half_identity) for b in range(3)]
            for a in range(3)
        ])
        self._Q = np.array([
            [[self._read(a, linear[b] @ halves[c]) for c in range(3)] for b in range(3)]
            for a in range(3)
        ])

    @staticmethod
    def _read(axis, vector):
        """Tr[sigma^axis X] for X given as an HS vector."""
        return float(np.vdot(PAULI_VECTORS[axis], vector).real)

    def rhs(self, s):
        s = np.asarray(s, dtype=float)
        return self._c + self._C @ s + np.einsum('abc,b,c->a', self._Q, s, s)

    def jacobian(self, s):
        s = np.asarray(s, dtype=float)
        return self._C + np.einsum('abc,c->ab', self._Q, s) + np.einsum('abc,b->ac', self._Q, s)

    def generator(self, s):
        """The 4 x 4 single-site generator L(s)."""
        return self.reduction.generator(s)

    def rhs_direct(self, s):
        """ds/dt evaluated by applying L(s) to rho(s); reference for ``rhs``."""
        rho = 0.5 * (PAULI_MATRICES['I'] + sum(v * PAULI_MATRICES[a] for v, a in zip(s, 'XYZ')))
        image = devectorize(self.generator(s).matrix @ vectorize(rho))
        return np.array([np.trace(PAULI_MATRICES[a] @ image).real for a in 'XYZ'])


def mf_rhs(s, spec, noise=None, r=0.0, **options):
    """ds/dt of the mean-field equations at Bloch vector s."""
    return MeanFieldModel(spec, noise, r, **options).rhs(s)


def integrate(model, seed, duration, max_step=np.inf):
    """Adaptive RK45 trajectory of the mean-field equations."""
    return solve_ivp(
        lambda t, s: model.rhs(s), (0.0, duration), np.asarray(seed, dtype=float),
        method='RK45', rtol=RTOL, atol=ATOL, max_step=max_step,
    )


def newton_polish(model, s, max_iterations=50):
    """
    Damped Newton iteration on ds/dt = 0.

    Returns:
        tuple: (s, residual norm)
    """
    s = np.asarray(s, dtype=float)
    residual = float(np.linalg.norm(model.rhs(s)))
    for _ in range(max_iterations):
        if residual < STATIONARY_TOL:
            break
        try:
            step = np.linalg.solve(model.jacobian(s), -model.rhs(s))
        except np.linalg.LinAlgError:
            break
        damping = 1.0
        while damping > 1e-6:
            trial = s + damping * step
            trial_residual = float(np.linalg.norm(model.rhs(trial)))
            if trial_residual < residual:
                s, residual = trial, trial_residual
                break
            damping *= 0.5
        else:
            break
    return s, residual


def _is_stable(model, s):
    eigenvalues = np.linalg.eigvals(model.jacobian(s))
    return bool(np.max(eigenvalues.real) <= STABILITY_TOL), eigenvalues


def _state(model, s, converged, residual, limit_cycle=False):
    stable, eigenvalues = _is_stable(model, s)
    norm = float(np.linalg.norm(s))
    if norm > 1.0 + BLOCH_SLACK:
        logger.warning(f'Mean-field state left the Bloch ball: |s| = {norm:.12f}')
    return MeanFieldState(
        tuple(float(v) for v in s), stable, converged, float(residual),
        tuple(complex(v) for v in eigenvalues), limit_cycle,
    )


def fixed_point_from(model, seed, time_budget=TIME_BUDGET):
    """
    Follow the flow from ``seed`` to a fixed point.

    Newton polishing is tried before integrating and after every chunk of
    integration; a polished point is accepted at once when it is stable, and
    an unstable one is accepted only once the trajectory itself sits on it.
    Running out of time without any fixed point is reported as a possible
    limit cycle.
    """
    s = np.asarray(seed, dtype=float)
    elapsed = 0.0
    last_root = None
    while True:
        polished, polished_residual = newton_polish(model, s)
        inside = np.linalg.norm(polished) <= 1.0 + BLOCH_SLACK
        if inside and polished_residual < STATIONARY_TOL * 100:
            last_root = (polished, polished_residual)
            stable, _ = _is_stable(model, polished)
            flow_residual = float(np.linalg.norm(model.rhs(s)))
            if stable or flow_residual < HANDOFF_TOL:
                return _state(model, polished, True, polished_residual)
        if elapsed >= time_budget:
            break
        s = integrate(model, s, INTEGRATION_CHUNK).y[:, -1]
        elapsed += INTEGRATION_CHUNK
    if last_root is not None:
        return _state(model, last_root[0], True, last_root[1])
    residual = float(np.linalg.norm(model.rhs(s)))
    logger.warning(
        f'No mean-field fixed point within t={time_budget:.0f} '
        f'(|ds/dt|={residual:.3e}); possible limit cycle'
    )
    return _state(model, s, False, residual, limit_cycle=True)


def steady_from_seeds(model, seeds):
    """
    Stable fixed point reached from any of ``seeds``.

    Among the stable results the one with the largest transverse
    magnetization wins, so the ordered branch is preferred where both exist.
    """
    candidates = [fixed_point_from(model, seed) for seed in seeds]
    stable = [state for state in candidates if state.stable and state.converged]
    pool = stable or candidates
    best = max(pool, key=lambda state: (np.hypot(state.sx, state.sy), -state.residual))
    if not stable:
        logger.warning(f'No stable mean-field fixed point at g={model.spec.g:.6f}, r={model.r}')
    return best


def mf_steady(g, r, spec, noise=None, seeds=None, **options):
    """
    Stable mean-field fixed point at anisotropy g and noise strength r.

    Both the symmetry-broken seed (sx = sy = 1e-3) and the symmetric seed are
    tried by default.
    """
    model = MeanFieldModel(spec.with_g(g), noise, r, **options)
    return steady_from_seeds(model, seeds or (BROKEN_SEED, SYMMETRIC_SEED))


def mf_spectrum(state, spec, noise=None, r=0.0, **options):
    """
    Eigenvalues of the single-site generator L(s*) and of the equations'
    Jacobian at a fixed point; the mean-field stand-in for a Liouvillian
    spectrum.
    """
    model = MeanFieldModel(spec, noise, r, **options)
    s = state.s if isinstance(state, MeanFieldState) else tuple(state)
    generator_values = np.linalg.eigvals(model.generator(s).matrix)
    jacobian_values = np.linalg.eigvals(model.jacobian(s))
    order = np.argsort(-generator_values.real)
    return generator_values[order], jacobian_values[np.argsort(-jacobian_values.real)]
