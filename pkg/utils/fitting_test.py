'''Tests for fitting.py module'''
import numpy as np
import pytest

from utils.errors import FitError
from utils.fitting import FitModel, FitOptions, LorentzianDip, fit, fit_cpt, model_eval, model_partials
from utils.spectrum import Spectrum

CENTERS = [20.0, 24.5, 28.0, 32.5, 36.0, 40.0]
WIDTHS = [1.0, 1.4, 0.8, 1.2, 1.6, 1.1]
DEPTHS = [0.30, 0.20, 0.35, 0.25, 0.40, 0.22]


@pytest.fixture
def six_dips():
    '''Seed-pinned six-Lorentzian spectrum with 1% noise'''
    x = np.arange(15.0, 45.0 + 1e-9, 0.05)
    truth = FitModel(1.0, tuple(LorentzianDip(c, w, d) for c, w, d in zip(CENTERS, WIDTHS, DEPTHS)))
    rng = np.random.default_rng(2024)
    y = model_eval(truth, x) + rng.normal(0.0, 0.01, size=x.shape)
    return Spectrum(x, y)


def test_model_eval_depth_at_center():
    model = FitModel(2.0, (LorentzianDip(5.0, 2.0, 0.5),))
    assert model_eval(model, np.array([5.0, 6.0])) == pytest.approx([1.5, 1.75])


def test_recovers_six_dips(six_dips):
    result = fit_cpt(six_dips, CENTERS)
    assert result.converged
    dips = result.sorted_dips()
    for dip, width, depth in zip(dips, WIDTHS, DEPTHS):
        assert dip.fwhm == pytest.approx(width, rel=0.05)
        assert dip.depth == pytest.approx(depth, rel=0.05)
    assert [d.center for d in dips] == CENTERS
    assert result.stderr['depth0'] > 0
    assert 'center0' not in result.stderr


def test_analytic_jacobian_matches_finite_differences():
    model = FitModel(1.0, (LorentzianDip(-1.0, 1.5, 0.3), LorentzianDip(2.0, 0.8, 0.2)), 0.05, True, 0.5)
    x = np.linspace(-6, 6, 61)
    analytic = model_partials(model, x)
    for j, name in enumerate(model.free_names()):
        h = 1e-6
        up = model_eval(model.updated({name: model.value(name) + h}), x)
        down = model_eval(model.updated({name: model.value(name) - h}), x)
        assert np.max(np.abs(analytic[:, j] - (up - down) / (2 * h))) < 1e-6


def test_baseline_only_fit_is_the_mean():
    x = np.linspace(0, 1, 21)
    y = 1.0 + 0.1 * np.sin(7 * x)
    result = fit_cpt(Spectrum(x, y), [])
    assert result.model.baseline == pytest.approx(np.mean(y))


def test_all_fixed_returns_initial_model():
    x = np.linspace(0, 10, 50)
    model = FitModel(1.0, (LorentzianDip(5.0, 1.0, 0.2),)).fix('baseline', 'center0', 'fwhm0', 'depth0')
    result = fit(model, Spectrum(x, model_eval(model, x) + 0.01))
    assert result.iterations == 0
    assert result.model == model
    assert result.rss == pytest.approx(50 * 1e-4)


def test_translation_invariance(six_dips):
    '''Shifting the spectrum and the centers shifts the fit and nothing else'''
    a = fit_cpt(six_dips, CENTERS)
    b = fit_cpt(six_dips.shifted(100.0), [c + 100.0 for c in CENTERS])
    for da, db in zip(a.sorted_dips(), b.sorted_dips()):
        assert db.center == pytest.approx(da.center + 100.0)
        assert db.fwhm == pytest.approx(da.fwhm, rel=1e-6)
        assert db.depth == pytest.approx(da.depth, rel=1e-6)


def test_rss_never_increases(six_dips):
    start = fit_cpt(six_dips, CENTERS, options=FitOptions(max_iterations=1))
    final = fit_cpt(six_dips, CENTERS)
    assert start.iterations == 1
    assert final.rss <= start.rss


def test_linear_baseline():
    x = np.linspace(0, 20, 401)
    truth = FitModel(1.0, (LorentzianDip(10.0, 1.0, 0.3),), 0.01, True, float(np.mean(x)))
    result = fit_cpt(Spectrum(x, model_eval(truth, x)), [10.0], linear_baseline=True)
    assert result.model.slope == pytest.approx(0.01, rel=1e-4)
    assert result.model.dips[0].fwhm == pytest.approx(1.0, rel=1e-4)


def test_non_finite_data_is_rejected():
    x = np.linspace(0, 1, 5)
    spectrum = Spectrum(x, np.ones(5))
    object.__setattr__(spectrum, 'y', np.array([1, 1, np.nan, 1, 1]))
    with pytest.raises(FitError):
        fit(FitModel(1.0), spectrum)


def test_too_many_parameters():
    x = np.linspace(0, 1, 3)
    model = FitModel(1.0, (LorentzianDip(0.5, 1.0, 0.1),))
    with pytest.raises(FitError):
        fit(model, Spectrum(x, np.ones(3)))


def test_free_centers_recover_a_noiseless_spectrum():
    x = np.arange(5.0, 25.0 + 1e-9, 0.05)
    truth = FitModel(1.0, (LorentzianDip(10.0, 1.0, 0.3), LorentzianDip(14.0, 1.5, 0.2),
                           LorentzianDip(19.0, 0.8, 0.25)))
    guess = FitModel(0.98, tuple(LorentzianDip(d.center + 0.2, 1.2 * d.fwhm, 0.8 * d.depth) for d in truth.dips))
    result = fit(guess, Spectrum(x, model_eval(truth, x)))
    assert result.converged
    assert result.model.baseline == pytest.approx(1.0, rel=1e-6)
    for found, expected in zip(result.sorted_dips(), truth.dips):
        assert found.center == pytest.approx(expected.center, rel=1e-6)
        assert found.fwhm == pytest.approx(expected.fwhm, rel=1e-6)
        assert found.depth == pytest.approx(expected.depth, rel=1e-6)


def test_collapsing_width_stays_positive():
    '''A one-sample dip pulls the width toward zero; the fit must still return'''
    x = np.linspace(0.0, 10.0, 101)
    y = np.ones_like(x)
    y[50] = 0.5
    result = fit_cpt(Spectrum(x, y), [5.0])
    dip = result.model.dips[0]
    assert 0 < dip.fwhm < 0.2
    assert np.all(np.isfinite(model_eval(result.model, x)))


def test_invalid_start_is_a_fit_error():
    x = np.linspace(0.0, 10.0, 21)
    model = FitModel(1.0, (LorentzianDip(5.0, 1.0, 0.2),))
    object.__setattr__(model.dips[0], 'fwhm', 0.0)
    with pytest.raises(FitError):
        fit(model, Spectrum(x, np.ones_like(x)))
