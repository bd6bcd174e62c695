''' Lindblad time evolution, steady states and pulse-sequence execution

    Density matrices are vectorized row-major (numpy's flatten), so that
    vec(A·ρ·B) = (A ⊗ Bᵀ)·vec(ρ).
'''
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import DegenerateSteadyStateError, IntegrationError, NumericalError
from .fields import DriveField, PumpField, assign_frame
from .hamiltonian import TWO_PI, Hamiltonian, LindbladTerm, build_collapse, build_hamiltonian
from .levels import BasisFlags, LevelBasis, Manifold, build_basis, ground
from .nv_params import NvParams

logger = logging.getLogger(__name__)

RTOL = 1e-8
ATOL = 1e-10
NULL_SPACE_TOLERANCE = 1e-9
STEADY_RESIDUAL_TARGET = 1e-10

# duration marker: replace the state by the steady state of the segment's fields
UNTIL_STEADY_STATE = 'steady'


class Reset(Enum):
    GREEN = 'green'


class InitialState(Enum):
    THERMAL_NUCLEAR_MS_ZERO = 'thermal'
    FULLY_MIXED_GROUND = 'mixed'
    CUSTOM = 'custom'


@dataclass(frozen=True)
class Segment:
    ''' One timed block of a pulse sequence

        window is the detection time credited to a steady-state segment.
    '''
    duration: Union[float, str]
    fields: Tuple[DriveField, ...] = ()
    reset: Optional[Reset] = None
    detect: bool = False
    window: float = 0.0
    label: str = ''
    pumps: Tuple[PumpField, ...] = ()

    def __post_init__(self):
        if self.duration != UNTIL_STEADY_STATE:
            if self.duration < 0:
                raise ValueError('segment duration must be >= 0')
            if self.duration == 0 and self.fields and self.detect:
                raise ValueError('a detecting segment needs a positive duration')

    @property
    def is_steady(self) -> bool:
        return self.duration == UNTIL_STEADY_STATE


@dataclass(frozen=True)
class PulseSequence:
    segments: Tuple[Segment, ...]
    initial: InitialState = InitialState.THERMAL_NUCLEAR_MS_ZERO
    initial_rho: Optional[np.ndarray] = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError('pulse sequence is empty')
        if self.initial is InitialState.CUSTOM and self.initial_rho is None:
            raise ValueError('custom initial state needs initial_rho')

    @property
    def has_detect(self) -> bool:
        return any(segment.detect for segment in self.segments)


@dataclass
class Trajectory:
    times: np.ndarray               # µs
    populations: np.ndarray         # (samples, N)
    states: np.ndarray              # (samples, N, N)
    excited_integral: float         # µs, detect segments only

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


@dataclass
class SequenceResult:
    rho: np.ndarray
    counts: float
    trajectories: List[Trajectory] = field(default_factory=list)


def check_density(rho: np.ndarray, trace_tol: float = 1e-9, positivity_tol: float = 1e-8):
    ''' Raise NumericalError if rho is not a valid density matrix '''
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise NumericalError('density matrix is not Hermitian')
    trace = np.trace(rho).real
    if abs(trace - 1) > trace_tol:
        raise NumericalError(f'density matrix trace is {trace!r}')
    lowest = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lowest < -positivity_tol:
        raise NumericalError(f'density matrix has eigenvalue {lowest:.3g}')


def _trace_vector(n: int) -> np.ndarray:
    w = np.zeros(n * n, dtype=complex)
    w[np.arange(n) * (n + 1)] = 1.0
    return w


def _commutator_super(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def liouvillian(h: np.ndarray, collapse: Sequence[LindbladTerm]) -> np.ndarray:
    ''' L with d vec(ρ)/dt = L·vec(ρ); h in rad/µs, collapse rates in MHz '''
    h = np.asarray(h)
    n = h.shape[0]
    if h.shape != (n, n):
        raise ValueError(f'Hamiltonian must be square, got {h.shape}')
    eye = np.eye(n)
    out = _commutator_super(h)
    for term in collapse:
        c = term.operator
        if c.shape != (n, n):
            raise ValueError(f'collapse operator {term.label!r} has shape {c.shape}, expected {(n, n)}')
        cdc = c.conj().T @ c
        gamma = TWO_PI * term.rate
        out += gamma * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
    return out


def _excited_functional(basis: LevelBasis) -> np.ndarray:
    n = len(basis)
    e = np.zeros(n * n, dtype=complex)
    for i in basis.excited_indices():
        e[i * (n + 1)] = 1.0
    return e


def excited_population(basis: LevelBasis, rho: np.ndarray) -> float:
    return float(sum(rho[i, i].real for i in basis.excited_indices()))


def _sample_times(duration: float, sample_count: int) -> np.ndarray:
    return np.linspace(0.0, duration, max(sample_count, 2))


def _propagate_expm(l: np.ndarray, e: np.ndarray, v0: np.ndarray, times: np.ndarray) -> Tuple[List[np.ndarray], float]:
    ''' Scaling-and-squaring exponential of the generator augmented by the excited functional '''
    size = l.shape[0]
    m = np.zeros((size + 1, size + 1), dtype=complex)
    m[:size, :size] = l
    m[size, :size] = e
    y = np.concatenate([v0, [0.0]])
    out = [v0]
    steps = np.diff(times)
    step = None
    cached = None
    for dt in steps:
        if cached is None or not math.isclose(dt, step, rel_tol=1e-12):
            step, cached = dt, expm(m * dt)
        y = cached @ y
        out.append(y[:size])
    return out, float(y[size].real)


def _propagate_rk(hamiltonian: Hamiltonian, collapse: Sequence[LindbladTerm], e: np.ndarray,
                  v0: np.ndarray, times: np.ndarray) -> Tuple[List[np.ndarray], float]:
    ''' Adaptive Dormand–Prince 5(4) on [vec ρ, ∫excited] '''
    l0 = liouvillian(hamiltonian.static, collapse)
    n = hamiltonian.dimension
    oscillating = []
    for term in hamiltonian.residual:
        up = np.zeros((n, n), dtype=complex)
        up[term.upper, term.lower] = term.amplitude
        oscillating.append((TWO_PI * term.frequency, _commutator_super(up), _commutator_super(up.conj().T)))
    size = l0.shape[0]

    def rhs(t, y):
        v = y[:size]
        dv = l0 @ v
        for omega, forward, backward in oscillating:
            phase = np.exp(-1j * omega * t)
            dv += phase * (forward @ v) + np.conj(phase) * (backward @ v)
        return np.concatenate([dv, [e @ v]])

    y0 = np.concatenate([v0, [0.0]]).astype(complex)
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, method='RK45', t_eval=times, rtol=RTOL, atol=ATOL)
    if not sol.success:
        raise IntegrationError(RTOL, ATOL, sol.message)
    out = [sol.y[:size, k] for k in range(sol.y.shape[1])]
    return out, float(sol.y[size, -1].real)


def propagate(rho0: np.ndarray, segment: Segment, basis: LevelBasis, params: NvParams,
              sample_count: int = 2, method: str = 'auto') -> Trajectory:
    ''' Evolve rho0 through one segment's fields (no reset), sampling sample_count times

        method: 'auto' (exponential when the frame is static), 'expm' or 'rk'.
    '''
    if segment.is_steady:
        raise ValueError('steady-state segments are solved by run_sequence')
    n = len(basis)
    duration = float(segment.duration)
    times = _sample_times(duration, sample_count)
    if duration == 0:
        states = np.repeat(rho0[np.newaxis], len(times), axis=0)
        return Trajectory(times, np.real(np.einsum('kii->ki', states)), states, 0.0)

    frame = assign_frame(basis, params, segment.fields)
    hamiltonian = build_hamiltonian(basis, params, segment.fields, frame)
    collapse = build_collapse(basis, params, segment.pumps)
    e = _excited_functional(basis)
    v0 = rho0.reshape(-1).astype(complex)
    if method == 'auto':
        method = 'expm' if hamiltonian.is_static else 'rk'
    if method == 'expm':
        if not hamiltonian.is_static:
            raise ValueError('matrix-exponential stepping needs a static frame')
        vectors, integral = _propagate_expm(liouvillian(hamiltonian.static, collapse), e, v0, times)
    elif method == 'rk':
        vectors, integral = _propagate_rk(hamiltonian, collapse, e, v0, times)
    else:
        raise ValueError(f'unknown propagation method {method!r}')

    states = np.array([v.reshape(n, n) for v in vectors])
    states = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    populations = np.real(np.einsum('kii->ki', states))
    return Trajectory(times, populations, states, integral if segment.detect else 0.0)


def apply_green_reset(rho: np.ndarray, basis: LevelBasis, params: NvParams) -> np.ndarray:
    ''' Incoherent green repolarization, per m_n

        A2 relaxes to m_s=±1 equally, Ey and singlet to m_s=0, then a fraction
        p of the m_s=±1 population moves to m_s=0. Every coherence is erased.
    '''
    p = params.green_polarization_p
    pops = np.real(np.diag(rho)).copy()
    out = np.zeros(len(basis))
    for m_n in basis.nuclear:
        zero, plus, minus = (basis.lookup(ground(s).at(m_n)) for s in (0, 1, -1))
        n_zero, n_plus, n_minus = pops[zero], pops[plus], pops[minus]
        for i in basis.sector_indices(m_n):
            manifold = basis.level(i).manifold
            if manifold is Manifold.A2:
                n_plus += 0.5 * pops[i]
                n_minus += 0.5 * pops[i]
            elif manifold in (Manifold.EY, Manifold.SINGLET):
                n_zero += pops[i]
        out[zero] = n_zero + p * (n_plus + n_minus)
        out[plus] = (1 - p) * n_plus
        out[minus] = (1 - p) * n_minus
    return np.diag(out).astype(complex)


def steady_state(h: Union[np.ndarray, Hamiltonian], collapse: Sequence[LindbladTerm]) -> np.ndarray:
    ''' Solve L·vec(ρ) = 0, tr ρ = 1 through the bordered system [[L, w], [wᵀ, 0]] '''
    if isinstance(h, Hamiltonian):
        if not h.is_static:
            raise ValueError('steady state needs a static rotating frame')
        h = h.static
    l = liouvillian(h, collapse)
    n = h.shape[0]
    singular = np.linalg.svd(l, compute_uv=False)
    scale = singular[0] if singular[0] > 0 else 1.0
    null_dim = int(np.sum(singular < NULL_SPACE_TOLERANCE * scale))
    if null_dim > 1:
        raise DegenerateSteadyStateError(null_dim)
    w = _trace_vector(n)
    size = n * n
    bordered = np.zeros((size + 1, size + 1), dtype=complex)
    bordered[:size, :size] = l
    bordered[:size, size] = w
    bordered[size, :size] = w
    rhs = np.zeros(size + 1, dtype=complex)
    rhs[size] = 1.0
    x = np.linalg.solve(bordered, rhs)
    rho = x[:size].reshape(n, n)
    rho = 0.5 * (rho + rho.conj().T)
    residual = np.linalg.norm(l @ rho.reshape(-1))
    if residual > STEADY_RESIDUAL_TARGET * max(np.linalg.norm(l), 1.0):
        logger.warning('steady-state residual %.3g above target', residual)
    return rho


def initial_state(basis: LevelBasis, policy: InitialState,
                  nuclear_weights: Optional[Dict[int, float]] = None) -> np.ndarray:
    ''' Uniform nuclear mixture unless weights are given; electron in m_s=0 or fully mixed '''
    nuclear = basis.nuclear
    weights = nuclear_weights or {m: 1.0 for m in nuclear}
    total = sum(weights.get(m, 0.0) for m in nuclear)
    rho = np.zeros((len(basis), len(basis)), dtype=complex)
    for m_n in nuclear:
        w = weights.get(m_n, 0.0) / total
        if policy is InitialState.THERMAL_NUCLEAR_MS_ZERO:
            i = basis.lookup(ground(0).at(m_n))
            rho[i, i] = w
        elif policy is InitialState.FULLY_MIXED_GROUND:
            for m_s in (-1, 0, 1):
                i = basis.lookup(ground(m_s).at(m_n))
                rho[i, i] = w / 3
        else:
            raise ValueError('custom initial states are passed explicitly')
    return rho


def count_factor(params: NvParams) -> float:
    ''' Detected photons per µs of excited population '''
    return params.collection_eff * TWO_PI * params.gamma_rad * (1.0 - params.leak_branch)


def run_sequence(seq: PulseSequence, basis: LevelBasis, params: NvParams,
                 sample_count: int = 2, nuclear_weights: Optional[Dict[int, float]] = None) -> SequenceResult:
    ''' Execute segments in order; counts are expected detected photons '''
    if seq.initial is InitialState.CUSTOM:
        rho = np.array(seq.initial_rho, dtype=complex)
    else:
        rho = initial_state(basis, seq.initial, nuclear_weights)
    counts = 0.0
    factor = count_factor(params)
    trajectories = []
    for segment in seq.segments:
        if segment.reset is Reset.GREEN:
            rho = apply_green_reset(rho, basis, params)
        if segment.is_steady:
            frame = assign_frame(basis, params, segment.fields)
            hamiltonian = build_hamiltonian(basis, params, segment.fields, frame)
            rho = steady_state(hamiltonian, build_collapse(basis, params, segment.pumps))
            if segment.detect:
                counts += factor * excited_population(basis, rho) * segment.window
            continue
        if segment.duration == 0:
            continue
        trajectory = propagate(rho, segment, basis, params, sample_count)
        trajectories.append(trajectory)
        if segment.detect:
            counts += factor * trajectory.excited_integral
        rho = trajectory.final
    return SequenceResult(rho, counts, trajectories)


def run_by_sector(seq: PulseSequence, flags: BasisFlags, params: NvParams,
                  nuclear_weights: Optional[Dict[int, float]] = None) -> Tuple[float, Dict[int, SequenceResult]]:
    ''' Run the sequence once per m_n sector and sum counts with the nuclear weights

        Exact because every field and collapse channel conserves m_n.
    '''
    weights = nuclear_weights or {m: 1.0 for m in flags.nuclear}
    total = sum(weights.values())
    counts = 0.0
    results = {}
    for m_n in flags.nuclear:
        w = weights.get(m_n, 0.0) / total
        if w == 0:
            continue
        basis = build_basis(BasisFlags(flags.include_a2, flags.include_ey, flags.include_singlet, (m_n,)))
        result = run_sequence(seq, basis, params)
        results[m_n] = result
        counts += w * result.counts
    return counts, results


def sector_steady_state(fields: Sequence[DriveField], flags: BasisFlags, params: NvParams,
                        m_n: int, pumps: Sequence[PumpField] = ()) -> Tuple[LevelBasis, np.ndarray]:
    ''' Steady state of one nuclear sector under static CW fields '''
    basis = build_basis(BasisFlags(flags.include_a2, flags.include_ey, flags.include_singlet, (m_n,)))
    frame = assign_frame(basis, params, fields)
    hamiltonian = build_hamiltonian(basis, params, fields, frame)
    return basis, steady_state(hamiltonian, build_collapse(basis, params, pumps))
