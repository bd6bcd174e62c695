'''Tests for fields.py module'''
import math

import pytest

from utils.fields import assign_frame, microwave, optical
from utils.levels import A2, BasisFlags, build_basis, ground
from utils.nv_params import NvParams, level_energy


@pytest.fixture
def params():
    return NvParams()


@pytest.fixture
def sector():
    return build_basis(BasisFlags(nuclear=(0,)))


def lambda_system(offset=0.0):
    return [optical(ground(-1), A2, 2.0, offset), optical(ground(1), A2, 2.0)]


def test_field_validation():
    with pytest.raises(ValueError):
        optical(ground(0), ground(1), 1.0)
    with pytest.raises(ValueError):
        microwave(ground(0), A2, 1.0)
    with pytest.raises(ValueError):
        microwave(ground(1), ground(1), 1.0)
    with pytest.raises(ValueError):
        optical(ground(0), A2, -1.0)


def test_lab_frequency(params):
    field = microwave(ground(0), ground(1), 1.0, 0.5)
    assert field.lab_frequency(params) == pytest.approx(2885.5)
    shifted = field.with_(reference_m_n=1)
    assert shifted.lab_frequency(params) == pytest.approx(2885.5 + params.hyperfine_a)


def test_pairs_cover_every_sector(params):
    basis = build_basis()
    pairs = optical(ground(1), A2, 1.0).pairs(basis)
    assert len(pairs) == 3
    for lo, up in pairs:
        assert basis.level(lo).m_n == basis.level(up).m_n


def test_lambda_frame_is_static(params, sector):
    '''Rotation differences equal the drive frequencies'''
    fields = lambda_system(0.7)
    frame = assign_frame(sector, params, fields)
    assert not frame.residual_time_dependent
    for field in fields:
        for lo, up in field.pairs(sector):
            assert frame.rotation[up] - frame.rotation[lo] == pytest.approx(field.lab_frequency(params))


def test_undriven_level_rotates_at_its_energy(params, sector):
    frame = assign_frame(sector, params, lambda_system())
    zero = sector.lookup(ground(0).at(0))
    assert frame.rotation[zero] == level_energy(params, ground(0).at(0))


def test_consistent_loop_has_no_residual(params, sector):
    fields = lambda_system() + [microwave(ground(0), ground(1), 1.0), microwave(ground(0), ground(-1), 1.0)]
    assert not assign_frame(sector, params, fields).residual_time_dependent


def test_loop_violation_gives_one_residual(params, sector):
    '''The closing microwave keeps the loop mismatch as its oscillation frequency'''
    fields = lambda_system(1.25) + [microwave(ground(0), ground(1), 1.0), microwave(ground(0), ground(-1), 1.0)]
    frame = assign_frame(sector, params, fields)
    assert len(frame.residual_terms) == 1
    term = frame.residual_terms[0]
    assert term.field_index == 3
    assert abs(term.frequency) == pytest.approx(1.25)
    assert abs(term.amplitude) == pytest.approx(math.pi * 1.0)


def test_shifted_frame(params, sector):
    frame = assign_frame(sector, params, lambda_system())
    moved = frame.shifted(3.0)
    assert [b - a for a, b in zip(frame.rotation, moved.rotation)] == pytest.approx([3.0] * len(sector))
