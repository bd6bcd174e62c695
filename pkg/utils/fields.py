''' Coherent drive fields, incoherent pumps and the rotating frame that makes the drives static '''
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Sequence, Tuple

from .levels import LevelBasis, LevelRef, Manifold
from .nv_params import NvParams, level_energy

logger = logging.getLogger(__name__)

# relative tolerance on the loop condition, in MHz per MHz of lab frequency
FRAME_TOLERANCE = 1e-9


class FieldKind(Enum):
    OPTICAL = 'optical'
    MICROWAVE = 'microwave'


@dataclass(frozen=True)
class DriveField:
    ''' One coherent field on one transition, coupling every m_n equally

        detuning is measured from the lower->upper line of the reference_m_n
        sector; rabi is an ordinary frequency (resonant period 1/rabi).
    '''
    kind: FieldKind
    lower: LevelRef
    upper: LevelRef
    rabi: float
    detuning: float = 0.0
    phase: float = 0.0
    reference_m_n: int = 0
    label: str = ''

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError('rabi must be >= 0')
        if self.kind is FieldKind.OPTICAL:
            if self.lower.manifold is not Manifold.GROUND or self.upper.manifold is Manifold.GROUND:
                raise ValueError('optical field must join a ground level to an excited manifold')
        else:
            if self.lower.manifold is not Manifold.GROUND or self.upper.manifold is not Manifold.GROUND:
                raise ValueError('microwave field must join two ground levels')
            if self.lower.m_s == self.upper.m_s:
                raise ValueError('microwave field must change m_s')

    def with_(self, **changes) -> 'DriveField':
        return replace(self, **changes)

    def lab_frequency(self, params: NvParams) -> float:
        upper = level_energy(params, self.upper.at(self.reference_m_n))
        lower = level_energy(params, self.lower.at(self.reference_m_n))
        return upper - lower + self.detuning

    def pairs(self, basis: LevelBasis) -> List[Tuple[int, int]]:
        ''' (lower, upper) index pairs, one per m_n present in both endpoints '''
        out = []
        for m_n in basis.nuclear:
            lo, up = self.lower.at(m_n), self.upper.at(m_n)
            if lo in basis and up in basis:
                out.append((basis.lookup(lo), basis.lookup(up)))
        return out


def optical(lower: LevelRef, upper: LevelRef, rabi: float, detuning: float = 0.0, **kw) -> DriveField:
    return DriveField(FieldKind.OPTICAL, lower, upper, rabi, detuning, **kw)


def microwave(lower: LevelRef, upper: LevelRef, rabi: float, detuning: float = 0.0, **kw) -> DriveField:
    return DriveField(FieldKind.MICROWAVE, lower, upper, rabi, detuning, **kw)


@dataclass(frozen=True)
class PumpField:
    ''' Incoherent one-way transfer source -> target between ground levels, in every m_n sector

        rate is in MHz. Unlike a DriveField it carries no phase, so it never
        takes part in the rotating frame or in a dark resonance.
    '''
    source: LevelRef
    target: LevelRef
    rate: float
    label: str = ''

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError('pump rate must be >= 0')
        if self.source.manifold is not Manifold.GROUND or self.target.manifold is not Manifold.GROUND:
            raise ValueError('pump must join two ground levels')
        if self.source.m_s == self.target.m_s:
            raise ValueError('pump must change m_s')

    def pairs(self, basis: LevelBasis) -> List[Tuple[int, int]]:
        ''' (source, target) index pairs, one per m_n present '''
        out = []
        for m_n in basis.nuclear:
            src, dst = self.source.at(m_n), self.target.at(m_n)
            if src in basis and dst in basis:
                out.append((basis.lookup(src), basis.lookup(dst)))
        return out


@dataclass(frozen=True)
class ResidualTerm:
    ''' A coupling left time dependent: H[upper, lower] = amplitude·exp(−2πi·frequency·t) '''
    lower: int
    upper: int
    amplitude: complex      # angular units (rad/µs)
    frequency: float        # MHz
    field_index: int


@dataclass(frozen=True)
class FrameAssignment:
    rotation: Tuple[float, ...]
    residual_terms: Tuple[ResidualTerm, ...] = ()

    @property
    def residual_time_dependent(self) -> bool:
        return bool(self.residual_terms)

    def residual_fields(self) -> List[int]:
        return sorted({term.field_index for term in self.residual_terms})

    def shifted(self, offset: float) -> 'FrameAssignment':
        ''' Same frame with every rotation frequency moved by a constant '''
        return FrameAssignment(tuple(r + offset for r in self.rotation), self.residual_terms)


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def assign_frame(basis: LevelBasis, params: NvParams, fields: Sequence[DriveField]) -> FrameAssignment:
    ''' Solve rotation(upper) − rotation(lower) = lab frequency over a spanning forest.

        Fields are taken in order; a field edge that closes a cycle and violates
        the loop condition becomes a residual time-dependent term. Each tree is
        rooted at its lowest index, which rotates at its own energy.
    '''
    size = len(basis)
    uf = _UnionFind(size)
    tree: Dict[int, List[Tuple[int, float]]] = {i: [] for i in range(size)}
    closing = []
    for k, field in enumerate(fields):
        omega = field.lab_frequency(params)
        for lo, up in field.pairs(basis):
            if uf.union(lo, up):
                tree[lo].append((up, omega))
                tree[up].append((lo, -omega))
            else:
                closing.append((k, lo, up, omega))

    rotation: List[float] = [math.nan] * size
    for root in range(size):
        if not math.isnan(rotation[root]):
            continue
        rotation[root] = level_energy(params, basis.level(root))
        stack = [root]
        while stack:
            node = stack.pop()
            for other, omega in tree[node]:
                if math.isnan(rotation[other]):
                    rotation[other] = rotation[node] + omega
                    stack.append(other)

    residual = []
    for k, lo, up, omega in closing:
        mismatch = omega - (rotation[up] - rotation[lo])
        if abs(mismatch) > FRAME_TOLERANCE * max(1.0, abs(omega)):
            field = fields[k]
            amplitude = math.pi * field.rabi * complex(math.cos(field.phase), math.sin(field.phase))
            residual.append(ResidualTerm(lo, up, amplitude, mismatch, k))
    frame = FrameAssignment(tuple(rotation), tuple(residual))
    if residual:
        logger.debug('frame keeps %d time-dependent couplings from fields %s',
                     len(residual), frame.residual_fields())
    return frame
