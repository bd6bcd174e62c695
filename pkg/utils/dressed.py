''' Dressed-state prediction of CPT dip positions under a strong 0 <-> +1 microwave

    Positions live on the two-photon detuning axis δ = ω(field on −1) − ω(field on +1).
    Detunings follow Δ_n = ω_mw − ω(0 → +1, m_n): blue detuning is positive.
'''
import math
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Tuple

import numpy as np

from .fields import assign_frame, microwave
from .hamiltonian import TWO_PI, build_hamiltonian
from .levels import BasisFlags, NUCLEAR_PROJECTIONS, build_basis, ground
from .nv_params import NvParams, microwave_line, two_photon_resonance


@dataclass(frozen=True)
class DressingSpec:
    rabi: float
    detunings: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError('dressing rabi must be >= 0')
        if not all(math.isfinite(d) for _, d in self.detunings):
            raise ValueError('dressing detunings must be finite')

    def detuning(self, m_n: int) -> float:
        return dict(self.detunings)[m_n]


def dressing_from_offset(params: NvParams, rabi: float, offset: float) -> DressingSpec:
    ''' Microwave placed offset MHz above the bare m_n=0 line of 0 -> +1 '''
    omega = microwave_line(params, 1, 0) + offset
    return DressingSpec(rabi, tuple((m, omega - microwave_line(params, 1, m)) for m in NUCLEAR_PROJECTIONS))


class DressedDip(NamedTuple):
    m_n: int
    branch: str         # '+' or '-'
    position: float     # MHz on the δ axis
    weight: float       # |+1> character, 0..1


def dressed_shifts(rabi: float, detuning: float) -> Tuple[float, float]:
    ''' ((Δ + √(Δ²+Ω²))/2, (Δ − √(Δ²+Ω²))/2) '''
    root = math.hypot(detuning, rabi)
    return 0.5 * (detuning + root), 0.5 * (detuning - root)


def dressed_weight(rabi: float, shift: float) -> float:
    ''' Share of the bare |+1> level in the dressed state displaced by shift '''
    if rabi == 0:
        return 1.0 if shift == 0 else 0.0
    return rabi * rabi / (rabi * rabi + 4 * shift * shift)


class DipSet:
    ''' Six dressed dips, ordered by (m_n, branch) '''

    def __init__(self, dips: List[DressedDip]):
        self.dips = sorted(dips, key=lambda d: (d.m_n, d.branch != '+'))

    def __iter__(self):
        return iter(self.dips)

    def __len__(self):
        return len(self.dips)

    def position(self, m_n: int, branch: str) -> float:
        for dip in self.dips:
            if dip.m_n == m_n and dip.branch == branch:
                return dip.position
        raise KeyError((m_n, branch))

    def positions(self) -> np.ndarray:
        return np.array([d.position for d in self.dips])

    def visible(self, min_weight: float = 0.05) -> List[DressedDip]:
        return sorted((d for d in self.dips if d.weight > min_weight), key=lambda d: d.position)

    def centers(self) -> List[float]:
        return sorted(d.position for d in self.dips)


def dip_positions(params: NvParams, dressing: DressingSpec) -> DipSet:
    dips = []
    for m_n, detuning in dressing.detunings:
        bare = two_photon_resonance(params, m_n)
        for branch, shift in zip('+-', dressed_shifts(dressing.rabi, detuning)):
            dips.append(DressedDip(m_n, branch, bare + shift, dressed_weight(dressing.rabi, shift)))
    return DipSet(dips)


def _dressing_field(params: NvParams, dressing: DressingSpec):
    ''' A microwave on 0 <-> +1 whose detuning from the m_n=0 line reproduces the dressing '''
    return microwave(ground(0), ground(1), dressing.rabi, dressing.detuning(0), label='dressing')


def dressed_oracle(params: NvParams, dressing: DressingSpec, full_block: bool = False) -> DipSet:
    ''' Diagonalize the rotating-frame ground Hamiltonian and map eigenvalues to δ

        The field's lab frequency fixes every Δ_n through the level energies, so
        the dressing's per-m_n detunings are honoured only when they are mutually
        consistent (as dressing_from_offset produces).
    '''
    basis = build_basis(BasisFlags(include_a2=False))
    field = _dressing_field(params, dressing)
    frame = assign_frame(basis, params, [field])
    h = build_hamiltonian(basis, params, [field], frame).static / TWO_PI
    dips = []
    if full_block:
        values, vectors = np.linalg.eigh(h)
        for m_n in basis.nuclear:
            zero = basis.lookup(ground(0).at(m_n))
            plus = basis.lookup(ground(1).at(m_n))
            minus = basis.lookup(ground(-1).at(m_n))
            weights = np.abs(vectors[zero]) ** 2 + np.abs(vectors[plus]) ** 2
            picked = np.argsort(weights)[-2:]
            pair = sorted(picked, key=lambda k: values[k], reverse=True)
            for branch, k in zip('+-', pair):
                position = frame.rotation[plus] + values[k] - frame.rotation[minus]
                shift = position - two_photon_resonance(params, m_n)
                dips.append(DressedDip(m_n, branch, position, dressed_weight(dressing.rabi, shift)))
        return DipSet(dips)
    for m_n in basis.nuclear:
        zero = basis.lookup(ground(0).at(m_n))
        plus = basis.lookup(ground(1).at(m_n))
        minus = basis.lookup(ground(-1).at(m_n))
        idx = [zero, plus]
        values = np.linalg.eigvalsh(h[np.ix_(idx, idx)])
        # levels rotate at their own energy when undriven, so h[minus, minus] is zero
        for branch, value in zip('+-', values[::-1]):
            position = frame.rotation[plus] + value - frame.rotation[minus] - h[minus, minus].real
            shift = position - two_photon_resonance(params, m_n)
            dips.append(DressedDip(m_n, branch, position, dressed_weight(dressing.rabi, shift)))
    return DipSet(dips)


def sum_rule(dips: DipSet, params: NvParams) -> Dict[int, float]:
    ''' position(+) + position(−) − 2·bare, which equals Δ_n '''
    return {m: dips.position(m, '+') + dips.position(m, '-') - 2 * two_photon_resonance(params, m)
            for m in NUCLEAR_PROJECTIONS}
