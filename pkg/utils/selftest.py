''' Invariant checks run by the selftest subcommand '''
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Callable, List, NamedTuple, Optional

import numpy as np

from .config import load_config, scan_config
from .dressed import dip_positions, dressed_oracle, dressed_shifts, dressing_from_offset
from .dynamics import Segment, check_density, excited_population, propagate
from .errors import NumericalError, NvSimError
from .experiments import (ScanConfig, cpt_scan, dressing_field, lambda_fields, repump_pumps,
                          run_experiment, stark_settings)
from .fields import assign_frame
from .fitting import FitModel, LorentzianDip, model_eval, model_partials
from .hamiltonian import build_hamiltonian
from .levels import NUCLEAR_PROJECTIONS, BasisFlags, build_basis, ground
from .nv_params import NvParams, two_photon_resonance
from .spectrum import Spectrum, find_dips, strongest

logger = logging.getLogger(__name__)

CONFIG_DIR = Path(__file__).resolve().parent.parent / 'configs'
# points per scan when smoke-running the shipped configurations
SMOKE_POINTS = 5
# coarsest grid (MHz) on which CPT and Stark smoke runs must resolve their dips
DIP_STEP = 0.2


class Check(NamedTuple):
    name: str
    passed: bool
    detail: str


def check_hermitian() -> str:
    cfg = ScanConfig('cpt')
    basis = build_basis(BasisFlags(nuclear=(0,)))
    fields = lambda_fields(cfg, 31.0) + [dressing_field(2.0, 0.0)]
    h = build_hamiltonian(basis, cfg.params, fields, assign_frame(basis, cfg.params, fields)).static
    error = float(np.max(np.abs(h - h.conj().T)))
    if error != 0.0:
        raise NumericalError(f'|H - H†| = {error:g}')
    return 'Λ + dressing Hamiltonian is Hermitian'


def check_propagation() -> str:
    cfg = ScanConfig('cpt')
    basis = build_basis(BasisFlags(nuclear=(1,)))
    rho0 = np.zeros((len(basis), len(basis)), dtype=complex)
    rho0[basis.lookup(ground(-1).at(1)), basis.lookup(ground(-1).at(1))] = 1.0
    segment = Segment(0.5, tuple(lambda_fields(cfg, 29.0)), detect=True, pumps=tuple(repump_pumps(cfg)))
    fast = propagate(rho0, segment, basis, cfg.params, 6, method='expm')
    slow = propagate(rho0, segment, basis, cfg.params, 6, method='rk')
    for rho in fast.states:
        check_density(rho)
    gap = float(np.max(np.abs(fast.states - slow.states)))
    if not gap < 1e-6:
        raise NumericalError(f'exponential and adaptive paths differ by {gap:g}')
    return f'paths agree to {gap:.1e}'


def check_dark_state() -> str:
    params = NvParams(ground_dephase=0.0, leak_branch=0.0)
    excited = dark_state_population(params)
    if not excited < 1e-8:
        raise NumericalError(f'excited population {excited:g} at two-photon resonance')
    return f'excited population {excited:.1e}'


def dark_state_population(params: NvParams, duration: float = 30.0) -> float:
    ''' Excited population after optically pumping a ±1 mixture at two-photon resonance '''
    cfg = ScanConfig('cpt', params=params)
    basis = build_basis(BasisFlags(nuclear=(0,)))
    rho0 = np.zeros((len(basis), len(basis)), dtype=complex)
    for m_s in (-1, 1):
        i = basis.lookup(ground(m_s).at(0))
        rho0[i, i] = 0.5
    segment = Segment(duration, tuple(lambda_fields(cfg, two_photon_resonance(params, 0))))
    return excited_population(basis, propagate(rho0, segment, basis, params).final)


def check_dressed_oracle(draws: int = 200, seed: int = 7) -> str:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(draws):
        params = NvParams(zeeman_split=rng.uniform(5, 60), hyperfine_a=rng.uniform(-4, 4),
                          quadrupole_q=rng.uniform(0, 6))
        dressing = dressing_from_offset(params, rng.uniform(0.1, 10), rng.uniform(-12, 12))
        analytic = dip_positions(params, dressing).positions()
        oracle = dressed_oracle(params, dressing).positions()
        worst = max(worst, float(np.max(np.abs(analytic - oracle) / np.maximum(np.abs(analytic), 1.0))))
        for _, detuning in dressing.detunings:
            plus, minus = dressed_shifts(dressing.rabi, detuning)
            if not math.isclose(plus - minus, math.hypot(detuning, dressing.rabi), rel_tol=1e-14):
                raise NumericalError(f'dressed splitting at Δ={detuning:g} is not √(Δ²+Ω²)')
    if not worst < 1e-9:
        raise NumericalError(f'analytic and oracle positions differ by {worst:g}')
    return f'{draws} draws, worst relative gap {worst:.1e}'


def check_quadrupole_invariance() -> str:
    base = ScanConfig('cpt', start=20.0, stop=40.0, step=1.0)
    a = cpt_scan(base.with_(params=base.params.with_(quadrupole_q=0.0))).y
    b = cpt_scan(base.with_(params=base.params.with_(quadrupole_q=5.0))).y
    gap = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
    if not gap < 1e-6:
        raise NumericalError(f'Q changes the CPT spectrum by {gap:g}')
    return f'relative gap {gap:.1e}'


def check_jacobian() -> str:
    model = FitModel(1.0, (LorentzianDip(-1.0, 1.5, 0.3), LorentzianDip(2.0, 0.8, 0.2)), 0.01, True)
    x = np.linspace(-5, 5, 41)
    analytic = model_partials(model, x)
    numeric = np.zeros_like(analytic)
    for j, name in enumerate(model.free_names()):
        h = 1e-6
        hi = model.updated({name: model.value(name) + h})
        lo = model.updated({name: model.value(name) - h})
        numeric[:, j] = (model_eval(hi, x) - model_eval(lo, x)) / (2 * h)
    gap = float(np.max(np.abs(analytic - numeric)))
    if not gap < 1e-6:
        raise NumericalError(f'Jacobian mismatch {gap:g}')
    return f'Jacobian matches finite differences to {gap:.1e}'


def smoke_config(path: Path) -> str:
    ''' Parse one shipped configuration and run a coarse version of its experiment

        CPT and Stark configurations must also show their count_hint strongest
        dips where the hyperfine and dressed-state laws put them.
    '''
    config = load_config(str(path))
    kind = config.get('scan', 'experiment') or 'cpt'
    cfg = scan_config(config, kind)
    if kind not in ('cpt', 'stark'):
        spectra = run_experiment(_coarse(cfg))
        return f'{kind}: {len(spectra)} spectra'
    cfg = _first_setting(cfg)
    cfg = cfg.with_(step=max(cfg.step or DIP_STEP, DIP_STEP))
    spectrum = run_experiment(cfg)[0]
    count = config.get('fit', 'count_hint') or 1
    return check_dip_law(spectrum, predicted_dips(cfg), count, max(0.5, 2 * cfg.step))


def predicted_dips(cfg: ScanConfig) -> List[float]:
    ''' Bare hyperfine lines for CPT, every dressed branch of the first setting for Stark '''
    if cfg.kind == 'stark':
        rabi, offset = stark_settings(cfg)[0]
        return list(dip_positions(cfg.params, dressing_from_offset(cfg.params, rabi, offset)).positions())
    return [two_photon_resonance(cfg.params, m_n) for m_n in NUCLEAR_PROJECTIONS]


def check_dip_law(spectrum: Spectrum, predicted: List[float], count: int, tolerance: float) -> str:
    search = find_dips(spectrum, count_hint=count)
    if not search.dips:
        raise NumericalError('no dip in the spectrum')
    found = strongest(search, count)
    for dip in found:
        miss = min(abs(dip.center - p) for p in predicted)
        if miss > tolerance:
            raise NumericalError(f'dip at {dip.center:.3f} MHz is {miss:.3f} MHz from every predicted position')
    return f'{len(found)} dips on the predicted positions'


def _first_setting(cfg: ScanConfig) -> ScanConfig:
    f = cfg.fields
    return cfg.with_(fields=replace(f, mw_rabi_list=f.mw_rabi_list[:1], mw_detuning_list=f.mw_detuning_list[:1]))


def _coarse(cfg: ScanConfig) -> ScanConfig:
    if cfg.kind == 'rabi':
        start, stop = cfg.start or 0.0, cfg.stop or 0.5
    else:
        start, stop = cfg.start or -300.0, cfg.stop or 300.0
    return cfg.with_(start=start, stop=stop, step=(stop - start) / (SMOKE_POINTS - 1))


CHECKS: List[Callable[[], str]] = [check_hermitian, check_propagation, check_dark_state,
                                   check_dressed_oracle, check_quadrupole_invariance, check_jacobian]


def run_selftest(config_dir: Optional[Path] = None) -> List[Check]:
    ''' Run every invariant check and every shipped configuration; failures never raise '''
    results = []
    for check in CHECKS:
        results.append(_run(check.__name__, check))
    for path in sorted((config_dir or CONFIG_DIR).glob('*.conf')):
        results.append(_run(f'config {path.name}', lambda p=path: smoke_config(p)))
    failed = sum(not r.passed for r in results)
    logger.info('selftest: %d checks, %d failed', len(results), failed)
    return results


def _run(name: str, check: Callable[[], str]) -> Check:
    try:
        return Check(name, True, check())
    except (NvSimError, ValueError) as err:
        logger.debug('check %s failed', name, exc_info=True)
        return Check(name, False, str(err))
