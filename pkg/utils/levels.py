''' NV level structure: electronic manifolds times the 14N nuclear spin projection '''
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

NUCLEAR_PROJECTIONS = (-1, 0, 1)
ELECTRON_PROJECTIONS = (-1, 0, 1)


class Manifold(Enum):
    GROUND = 'ground'
    A2 = 'A2'
    EY = 'Ey'
    SINGLET = 'singlet'


EXCITED_MANIFOLDS = (Manifold.A2, Manifold.EY)


@dataclass(frozen=True)
class SpinLevel:
    ''' One basis level. Only Ground levels carry m_s; every level carries m_n. '''
    manifold: Manifold
    m_s: Optional[int]
    m_n: int

    def __post_init__(self):
        if self.manifold is Manifold.GROUND:
            if self.m_s not in ELECTRON_PROJECTIONS:
                raise ValueError(f'ground level needs m_s in {{-1,0,1}}, got {self.m_s}')
        elif self.m_s is not None:
            raise ValueError(f'{self.manifold.value} level carries no m_s')
        if self.m_n not in NUCLEAR_PROJECTIONS:
            raise ValueError(f'm_n must be in {{-1,0,1}}, got {self.m_n}')

    @property
    def ref(self) -> 'LevelRef':
        return LevelRef(self.manifold, self.m_s)

    def __str__(self):
        if self.manifold is Manifold.GROUND:
            return f'|ms={self.m_s:+d},mn={self.m_n:+d}>'
        return f'|{self.manifold.value},mn={self.m_n:+d}>'


@dataclass(frozen=True)
class LevelRef:
    ''' A level descriptor without m_n: what a drive field targets '''
    manifold: Manifold
    m_s: Optional[int] = None

    def at(self, m_n: int) -> SpinLevel:
        return SpinLevel(self.manifold, self.m_s, m_n)


def ground(m_s: int) -> LevelRef:
    return LevelRef(Manifold.GROUND, m_s)


A2 = LevelRef(Manifold.A2)
EY = LevelRef(Manifold.EY)
SINGLET = LevelRef(Manifold.SINGLET)


@dataclass(frozen=True)
class BasisFlags:
    ''' Which manifolds and nuclear sectors a basis contains '''
    include_a2: bool = True
    include_ey: bool = False
    include_singlet: bool = False
    nuclear: Tuple[int, ...] = NUCLEAR_PROJECTIONS


class LevelBasis:
    ''' Dense, ordered basis with index lookup. Immutable after construction. '''

    def __init__(self, levels: Sequence[SpinLevel]):
        self._levels = tuple(levels)
        self._index: Dict[SpinLevel, int] = {}
        for i, level in enumerate(self._levels):
            if level in self._index:
                raise ValueError(f'duplicate level {level}')
            self._index[level] = i

    @property
    def levels(self) -> Tuple[SpinLevel, ...]:
        return self._levels

    @property
    def nuclear(self) -> Tuple[int, ...]:
        return tuple(sorted({level.m_n for level in self._levels}))

    def __len__(self) -> int:
        return len(self._levels)

    def __iter__(self):
        return iter(self._levels)

    def __contains__(self, level: SpinLevel) -> bool:
        return level in self._index

    def level(self, i: int) -> SpinLevel:
        return self._levels[i]

    def lookup(self, level: SpinLevel) -> int:
        return self._index[level]

    def has(self, ref: LevelRef) -> bool:
        return any(level.ref == ref for level in self._levels)

    def indices(self, ref: LevelRef) -> List[int]:
        ''' Indices of all levels matching a descriptor, in m_n order '''
        return [i for i, level in enumerate(self._levels) if level.ref == ref]

    def manifold_indices(self, *manifolds: Manifold) -> List[int]:
        return [i for i, level in enumerate(self._levels) if level.manifold in manifolds]

    def excited_indices(self) -> List[int]:
        ''' Radiating levels: A2 and Ey '''
        return self.manifold_indices(*EXCITED_MANIFOLDS)

    def sector_indices(self, m_n: int) -> List[int]:
        return [i for i, level in enumerate(self._levels) if level.m_n == m_n]

    def __repr__(self):
        return f'LevelBasis({len(self)} levels)'


def build_basis(flags: BasisFlags = BasisFlags()) -> LevelBasis:
    ''' Ground levels first in (m_s, m_n) lexicographic order, then A2, Ey, Singlet by m_n '''
    nuclear = tuple(sorted(set(flags.nuclear)))
    levels = [SpinLevel(Manifold.GROUND, m_s, m_n) for m_s in ELECTRON_PROJECTIONS for m_n in nuclear]
    extra = []
    if flags.include_a2:
        extra.append(Manifold.A2)
    if flags.include_ey:
        extra.append(Manifold.EY)
    if flags.include_singlet:
        extra.append(Manifold.SINGLET)
    for manifold in extra:
        levels.extend(SpinLevel(manifold, None, m_n) for m_n in nuclear)
    return LevelBasis(levels)
