''' Physical constants of the NV center and the level energies they imply

    Units: frequencies in MHz (ordinary, not angular), times in µs.
    Optical energies are measured from the A2 manifold, so the absolute optical
    frequency never enters a rotating-frame quantity.
'''
from dataclasses import dataclass, replace

from .levels import Manifold, SpinLevel


@dataclass(frozen=True)
class NvParams:
    '''Physical parameters (units: MHz)'''
    zeeman_split: float = 30.0          # m_s=+1 minus m_s=-1 splitting
    hyperfine_a: float = -2.2           # axial 14N constant, signed
    quadrupole_q: float = 5.0           # Q m_n^2, same in every manifold
    zfs: float = 2870.0                 # zero-field splitting, microwave frequencies only
    gamma_rad: float = 13.0             # A2 radiative decay rate
    leak_branch: float = 0.02           # A2 -> m_s=0 probability
    ground_dephase: float = 0.1         # pure dephasing of the m_s=+1/-1 coherence
    green_polarization_p: float = 0.9   # fraction of m_s=±1 moved to m_s=0 by a green pulse
    collection_eff: float = 0.01        # detected photons per emitted photon
    ey_offset: float = 3000.0           # Ey above A2
    singlet_rate: float = 0.5           # singlet -> m_s=0 decay rate

    def __post_init__(self):
        for name in ('gamma_rad', 'ground_dephase', 'singlet_rate', 'zfs'):
            if getattr(self, name) < 0:
                raise ValueError(f'{name} must be >= 0')
        if not 0 <= self.leak_branch < 1:
            raise ValueError('leak_branch must be in [0, 1)')
        for name in ('green_polarization_p', 'collection_eff'):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f'{name} must be in [0, 1]')

    def with_(self, **changes) -> 'NvParams':
        return replace(self, **changes)


def ground_energy(params: NvParams, m_s: int, m_n: int) -> float:
    ''' zfs·[m_s≠0] + (Δ_Z/2)·m_s + A·m_s·m_n + Q·m_n² '''
    return (params.zfs * (m_s != 0)
            + 0.5 * params.zeeman_split * m_s
            + params.hyperfine_a * m_s * m_n
            + params.quadrupole_q * m_n * m_n)


def level_energy(params: NvParams, level: SpinLevel) -> float:
    if level.manifold is Manifold.GROUND:
        return ground_energy(params, level.m_s, level.m_n)
    quadrupole = params.quadrupole_q * level.m_n * level.m_n
    if level.manifold is Manifold.A2:
        return quadrupole
    if level.manifold is Manifold.EY:
        return params.ey_offset + quadrupole
    # singlet is never driven coherently; its energy only sets a phase
    return quadrupole


def two_photon_resonance(params: NvParams, m_n: int) -> float:
    ''' δ at which the m_n sector goes dark: E(+1,m_n) − E(−1,m_n) = Δ_Z + 2A·m_n '''
    return ground_energy(params, 1, m_n) - ground_energy(params, -1, m_n)


def microwave_line(params: NvParams, m_s: int, m_n: int) -> float:
    ''' Frequency of the 0 ↔ m_s ground transition for one nuclear projection '''
    return ground_energy(params, m_s, m_n) - ground_energy(params, 0, m_n)
