''' Rotating-frame Hamiltonian and Lindblad collapse channels

    Angular units (rad/µs = 2π·MHz) are used only inside the matrices built here.
'''
import math
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .errors import AssemblyError
from .fields import DriveField, FrameAssignment, PumpField, ResidualTerm
from .levels import A2, EY, SINGLET, LevelBasis, ground
from .nv_params import NvParams, level_energy

TWO_PI = 2.0 * math.pi
HERMITIAN_TOLERANCE = 1e-12


@dataclass(frozen=True)
class LindbladTerm:
    operator: np.ndarray
    rate: float              # MHz
    label: str = ''

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError('collapse rate must be >= 0')


class Hamiltonian:
    ''' Static rotating-frame part plus the couplings the frame could not make static '''

    def __init__(self, static: np.ndarray, residual: Sequence[ResidualTerm] = ()):
        self.static = static
        self.residual = tuple(residual)

    @property
    def is_static(self) -> bool:
        return not self.residual

    @property
    def dimension(self) -> int:
        return self.static.shape[0]

    def at(self, t: float) -> np.ndarray:
        if not self.residual:
            return self.static
        h = self.static.copy()
        for term in self.residual:
            value = term.amplitude * np.exp(-1j * TWO_PI * term.frequency * t)
            h[term.upper, term.lower] += value
            h[term.lower, term.upper] += np.conj(value)
        return h


def _check_hermitian(h: np.ndarray):
    scale = max(1.0, float(np.max(np.abs(h))))
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOLERANCE * scale:
        raise AssemblyError('assembled Hamiltonian is not Hermitian')


def build_hamiltonian(basis: LevelBasis, params: NvParams, fields: Sequence[DriveField],
                      frame: FrameAssignment) -> Hamiltonian:
    ''' Diagonal 2π·(E − rotation); each static drive adds 2π·rabi/2·e^{iφ} on every m_n pair '''
    size = len(basis)
    h = np.zeros((size, size), dtype=complex)
    for i, level in enumerate(basis):
        h[i, i] = TWO_PI * (level_energy(params, level) - frame.rotation[i])
    residual_pairs = {(t.field_index, t.lower, t.upper) for t in frame.residual_terms}
    for k, field in enumerate(fields):
        coupling = math.pi * field.rabi * np.exp(1j * field.phase)
        for lo, up in field.pairs(basis):
            if (k, lo, up) in residual_pairs:
                continue
            h[up, lo] += coupling
            h[lo, up] += np.conj(coupling)
    _check_hermitian(h)
    return Hamiltonian(h, frame.residual_terms)


def _jump(basis: LevelBasis, target: int, source: int) -> np.ndarray:
    op = np.zeros((len(basis), len(basis)), dtype=complex)
    op[target, source] = 1.0
    return op


def build_collapse(basis: LevelBasis, params: NvParams, pumps: Sequence[PumpField] = ()) -> List[LindbladTerm]:
    ''' Radiative, leak, Ey, singlet, ground dephasing and incoherent pump channels; all conserve m_n '''
    terms: List[LindbladTerm] = []
    has_singlet = basis.has(SINGLET)
    for m_n in basis.nuclear:
        plus, zero, minus = (ground(s).at(m_n) for s in (1, 0, -1))
        if A2.at(m_n) in basis:
            a2 = basis.lookup(A2.at(m_n))
            radiative = params.gamma_rad * (1.0 - params.leak_branch) / 2.0
            for target in (plus, minus):
                if radiative > 0:
                    terms.append(LindbladTerm(_jump(basis, basis.lookup(target), a2), radiative,
                                              f'A2->{target}'))
            leak = params.gamma_rad * params.leak_branch
            if leak > 0:
                if has_singlet:
                    singlet = basis.lookup(SINGLET.at(m_n))
                    terms.append(LindbladTerm(_jump(basis, singlet, a2), leak, f'A2->singlet mn={m_n:+d}'))
                else:
                    terms.append(LindbladTerm(_jump(basis, basis.lookup(zero), a2), leak, f'A2->{zero}'))
        if has_singlet and params.singlet_rate > 0:
            singlet = basis.lookup(SINGLET.at(m_n))
            terms.append(LindbladTerm(_jump(basis, basis.lookup(zero), singlet), params.singlet_rate,
                                      f'singlet->{zero}'))
        if EY.at(m_n) in basis and params.gamma_rad > 0:
            terms.append(LindbladTerm(_jump(basis, basis.lookup(zero), basis.lookup(EY.at(m_n))),
                                      params.gamma_rad, f'Ey->{zero}'))
    if params.ground_dephase > 0:
        # (P+ − P−)/√2 at rate γ damps the +1/−1 coherence at exactly γ
        op = np.zeros((len(basis), len(basis)), dtype=complex)
        for m_n in basis.nuclear:
            op[basis.lookup(ground(1).at(m_n)), basis.lookup(ground(1).at(m_n))] = 1 / math.sqrt(2)
            op[basis.lookup(ground(-1).at(m_n)), basis.lookup(ground(-1).at(m_n))] = -1 / math.sqrt(2)
        terms.append(LindbladTerm(op, params.ground_dephase, 'ground dephasing'))
    for pump in pumps:
        if pump.rate == 0:
            continue
        for source, target in pump.pairs(basis):
            terms.append(LindbladTerm(_jump(basis, target, source), pump.rate,
                                      f'{pump.label or "pump"} {basis.level(source)}->{basis.level(target)}'))
    return terms
