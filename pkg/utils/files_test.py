'''Tests for files.py module - pytest version'''
import io

import numpy as np
import pytest

from utils.errors import ConfigError
from utils.files import FORMAT_HEADER, indexed_path, read_spectrum, silent_remove, write_fit, write_spectrum
from utils.fitting import FitModel, FitResult, LorentzianDip
from utils.spectrum import Spectrum


@pytest.fixture
def spectrum():
    x = np.array([29.0, 29.5, 30.0, 30.5])
    y = np.array([1.0, 0.123456789123, 0.0, 2.5e-7])
    return Spectrum(x, y, metadata={'model.zeeman_split': '30', 'experiment': 'cpt'})


@pytest.fixture
def result():
    model = FitModel(1.0, (LorentzianDip(34.4, 0.5, 0.1), LorentzianDip(25.6, 0.7, 0.2)))
    return FitResult(model, 1.5e-4, {'baseline': 0.001, 'fwhm0': 0.02, 'depth1': 0.003}, 12, True)


def test_spectrum_layout(spectrum):
    sink = io.StringIO()
    write_spectrum(spectrum, sink)
    lines = sink.getvalue().splitlines()
    assert lines[0] == FORMAT_HEADER
    assert '# model.zeeman_split = 30' in lines
    assert lines[lines.index('x_mhz,counts') + 1:] == ['29,1', '29.5,0.123456789', '30,0', '30.5,2.5e-07']


def test_spectrum_reads_back(spectrum, tmp_path):
    path = tmp_path / 'cpt.csv'
    with open(path, 'w', encoding='utf-8') as f:
        write_spectrum(spectrum, f)
    back = read_spectrum(path)
    assert back.x == pytest.approx(spectrum.x)
    assert back.y == pytest.approx(spectrum.y, rel=1e-8)
    assert back.metadata['experiment'] == 'cpt'
    assert back.axis == spectrum.axis


def test_plain_csv_is_accepted():
    back = read_spectrum(io.StringIO('x,y\n1,2\n2,3\n'))
    assert list(back.y) == [2.0, 3.0]


def test_bad_rows_are_reported(tmp_path):
    with pytest.raises(ConfigError):
        read_spectrum(io.StringIO('1,2\n2,oops\n'))
    with pytest.raises(ConfigError):
        read_spectrum(io.StringIO('2,1\n1,2\n'))
    with pytest.raises(ConfigError):
        read_spectrum(tmp_path / 'missing.csv')


def test_fit_records_in_center_order(result):
    sink = io.StringIO()
    write_fit(result, sink, {'source': 'x.csv'})
    lines = sink.getvalue().splitlines()
    assert lines[0] == FORMAT_HEADER
    assert '# source = x.csv' in lines
    assert '# converged = true' in lines
    start = lines.index('dip,center_mhz,center_err,fwhm_mhz,fwhm_err,depth,depth_err')
    assert lines[start + 1] == '0,25.6,0,0.7,0,0.2,0.003'
    assert lines[start + 2] == '1,34.4,0,0.5,0.02,0.1,0'
    assert lines[-2:] == ['baseline,1,0.001', 'rss,0.00015']


def test_indexed_path(tmp_path):
    assert indexed_path(tmp_path / 'out.csv', 2) == tmp_path / 'out_2.csv'


def test_silent_remove(tmp_path):
    path = tmp_path / 'partial.csv'
    path.write_text('x')
    silent_remove(path)
    assert not path.exists()
    silent_remove(path)
