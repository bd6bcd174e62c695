'''Tests for hamiltonian.py module'''
import math

import numpy as np
import pytest

from utils.errors import AssemblyError
from utils.fields import PumpField, assign_frame, microwave, optical
from utils.hamiltonian import TWO_PI, _check_hermitian, build_collapse, build_hamiltonian
from utils.levels import A2, BasisFlags, build_basis, ground
from utils.nv_params import NvParams


@pytest.fixture
def params():
    return NvParams()


def assemble(basis, params, fields):
    return build_hamiltonian(basis, params, fields, assign_frame(basis, params, fields))


def test_resonant_lambda_has_zero_diagonal(params):
    basis = build_basis(BasisFlags(nuclear=(0,)))
    fields = [optical(ground(-1), A2, 2.0), optical(ground(1), A2, 3.0)]
    h = assemble(basis, params, fields).static
    assert np.allclose(np.diag(h), 0)
    a2, minus, plus = basis.lookup(A2.at(0)), basis.lookup(ground(-1).at(0)), basis.lookup(ground(1).at(0))
    assert h[a2, minus] == pytest.approx(math.pi * 2.0)
    assert h[a2, plus] == pytest.approx(math.pi * 3.0)


def test_one_photon_detuning_on_diagonal(params):
    '''Detuning field a by d moves A2 and +1 to -2πd in the rotating frame'''
    basis = build_basis(BasisFlags(nuclear=(0,)))
    fields = [optical(ground(-1), A2, 2.0, 1.5), optical(ground(1), A2, 2.0)]
    h = assemble(basis, params, fields).static
    assert h[basis.lookup(A2.at(0)), basis.lookup(A2.at(0))].real == pytest.approx(-TWO_PI * 1.5)
    assert h[basis.lookup(ground(1).at(0)), basis.lookup(ground(1).at(0))].real == pytest.approx(-TWO_PI * 1.5)


def test_hermitian_with_phases(params):
    basis = build_basis()
    fields = [optical(ground(-1), A2, 2.0, 0.3, phase=0.4), optical(ground(1), A2, 1.0, phase=-1.1),
              microwave(ground(0), ground(-1), 0.2, phase=2.0)]
    h = assemble(basis, params, fields)
    assert h.is_static
    assert np.max(np.abs(h.static - h.static.conj().T)) == 0


def test_couplings_conserve_nuclear_spin(params):
    basis = build_basis()
    fields = [optical(ground(-1), A2, 2.0), microwave(ground(0), ground(1), 1.0)]
    h = assemble(basis, params, fields).static
    for i, j in zip(*np.nonzero(h)):
        assert basis.level(i).m_n == basis.level(j).m_n


def test_residual_coupling_oscillates(params):
    basis = build_basis(BasisFlags(nuclear=(0,)))
    fields = [optical(ground(-1), A2, 2.0, 1.0), optical(ground(1), A2, 2.0),
              microwave(ground(0), ground(1), 1.0), microwave(ground(0), ground(-1), 1.0)]
    h = assemble(basis, params, fields)
    assert not h.is_static
    term = h.residual[0]
    assert h.static[term.upper, term.lower] == 0
    assert h.at(0.25)[term.upper, term.lower] == pytest.approx(term.amplitude * np.exp(-1j * TWO_PI * term.frequency * 0.25))
    assert np.allclose(h.at(0.1), h.at(0.1).conj().T)


def test_non_hermitian_is_rejected():
    with pytest.raises(AssemblyError):
        _check_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))


def test_collapse_channels(params):
    '''Two radiative and one leak channel per sector, plus ground dephasing'''
    basis = build_basis()
    terms = build_collapse(basis, params)
    assert len(terms) == 10
    radiative = [t for t in terms if t.label.startswith('A2->|ms=+1') or t.label.startswith('A2->|ms=-1')]
    assert len(radiative) == 6
    assert all(t.rate == pytest.approx(13 * 0.98 / 2) for t in radiative)
    leak = [t for t in terms if t.label.startswith('A2->|ms=+0')]
    assert len(leak) == 3 and leak[0].rate == pytest.approx(13 * 0.02)


def test_collapse_with_singlet_and_ey(params):
    basis = build_basis(BasisFlags(True, True, True))
    labels = [t.label for t in build_collapse(basis, params)]
    assert sum(label.startswith('A2->singlet') for label in labels) == 3
    assert sum(label.startswith('singlet->') for label in labels) == 3
    assert sum(label.startswith('Ey->') for label in labels) == 3


def test_total_decay_rate(params):
    '''Σ rates out of A2 equals gamma_rad'''
    basis = build_basis(BasisFlags(nuclear=(0,)))
    a2 = basis.lookup(A2.at(0))
    out = sum(t.rate * float(np.sum(np.abs(t.operator[:, a2]) ** 2)) for t in build_collapse(basis, params)
              if t.label.startswith('A2'))
    assert out == pytest.approx(params.gamma_rad)


def test_pump_moves_population_without_coherence(params):
    '''One jump per sector from m_s=0 to the target level, nothing else'''
    basis = build_basis()
    pump = PumpField(ground(0), ground(-1), 0.2, 'repump')
    extra = build_collapse(basis, params, [pump])[len(build_collapse(basis, params)):]
    assert len(extra) == 3
    for term in extra:
        assert term.rate == 0.2
        assert np.count_nonzero(term.operator) == 1
        target, source = np.argwhere(term.operator)[0]
        assert basis.level(source).m_s == 0 and basis.level(target).m_s == -1
        assert basis.level(source).m_n == basis.level(target).m_n
    assert len(build_collapse(basis, params, [PumpField(ground(0), ground(-1), 0.0)])) == len(build_collapse(basis, params))


def test_pump_validation():
    with pytest.raises(ValueError):
        PumpField(ground(0), ground(0), 0.2)
    with pytest.raises(ValueError):
        PumpField(ground(0), A2, 0.2)
    with pytest.raises(ValueError):
        PumpField(ground(0), ground(1), -1.0)
