'''Tests for nv_params.py module'''
import pytest

from utils.levels import A2, EY, ground
from utils.nv_params import NvParams, ground_energy, level_energy, microwave_line, two_photon_resonance


@pytest.fixture
def params():
    return NvParams()


def test_default_hyperfine_spacing(params):
    '''Adjacent CPT resonances sit |2A| = 4.4 MHz apart'''
    assert abs(2 * params.hyperfine_a) == pytest.approx(4.4)
    spacing = two_photon_resonance(params, 1) - two_photon_resonance(params, 0)
    assert abs(spacing) == pytest.approx(4.4)


def test_ground_energy_terms():
    p = NvParams(zeeman_split=30, hyperfine_a=-2.2, quadrupole_q=5, zfs=2870)
    assert ground_energy(p, 0, 0) == 0
    assert ground_energy(p, 0, 1) == pytest.approx(5)
    assert ground_energy(p, 1, 1) == pytest.approx(2870 + 15 - 2.2 + 5)
    assert ground_energy(p, -1, 1) == pytest.approx(2870 - 15 + 2.2 + 5)


def test_two_photon_resonance_ignores_quadrupole_and_zfs(params):
    for m_n in (-1, 0, 1):
        other = params.with_(quadrupole_q=0.0, zfs=0.0)
        assert two_photon_resonance(params, m_n) == pytest.approx(two_photon_resonance(other, m_n))
        assert two_photon_resonance(params, m_n) == pytest.approx(30 + 2 * params.hyperfine_a * m_n)


def test_excited_energies(params):
    assert level_energy(params, A2.at(0)) == 0
    assert level_energy(params, EY.at(0)) == pytest.approx(params.ey_offset)
    assert level_energy(params, A2.at(1)) == pytest.approx(params.quadrupole_q)


def test_microwave_line(params):
    assert microwave_line(params, 1, 0) == pytest.approx(2885)
    assert microwave_line(params, 1, 1) - microwave_line(params, 1, 0) == pytest.approx(params.hyperfine_a)
    assert level_energy(params, ground(-1).at(0)) == pytest.approx(2855)


@pytest.mark.parametrize('changes', [{'gamma_rad': -1}, {'leak_branch': 1.0}, {'collection_eff': 1.5},
                                     {'green_polarization_p': -0.1}])
def test_invalid_params(changes):
    with pytest.raises(ValueError):
        NvParams(**changes)


def test_signed_hyperfine_is_allowed():
    assert NvParams(hyperfine_a=2.2).hyperfine_a == 2.2
