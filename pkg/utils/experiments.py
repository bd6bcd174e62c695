'''
    Scan drivers that turn the simulator into spectra: Rabi, PLE, CPT and the
    microwave-dressed (Stark) CPT family.
    Every scan evaluates each nuclear sector in its own reduced basis and sums
    the sector signals with the nuclear weights.
'''
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import gaussian_filter1d

from .dressed import dip_positions, dressing_from_offset
from .dynamics import (InitialState, PulseSequence, Reset, Segment, count_factor, excited_population,
                       run_by_sector, sector_steady_state)
from .errors import FitError
from .fields import DriveField, PumpField, microwave, optical
from .fitting import FitModel, LorentzianDip, fit
from .helpers import grid, mhz_to_str, us_to_str
from .levels import A2, EY, BasisFlags, NUCLEAR_PROJECTIONS, build_basis, ground
from .nv_params import NvParams, level_energy, two_photon_resonance
from .progress import ScanProgress
from .spectrum import Spectrum, peak_fwhm

logger = logging.getLogger(__name__)

KINDS = ('rabi', 'ple', 'cpt', 'stark')
STEADY = 'steady'
TIME = 'time'
# ground dephasing (MHz) that wipes out the ±1 coherence in background scans
INCOHERENT_DEPHASING = 1000.0


@dataclass(frozen=True)
class FieldSettings:
    optical_rabi: float = 2.5
    optical_rabi_b: Optional[float] = None
    repump_rabi: float = 0.2
    repump_transition: str = 'minus'
    prep: str = 'strong'
    prep_transition: str = 'plus'
    prep_rabi: float = 5.0
    prep_m_n: int = 0
    mw_rabi: float = 0.0
    mw_detuning: float = 0.0
    mw_rabi_list: Tuple[float, ...] = ()
    mw_detuning_list: Tuple[float, ...] = ()
    readout: str = 'a2'
    probe_rabi: float = 2.0
    ple_mw_rabi: float = 1.0

    @property
    def rabi_b(self) -> float:
        return self.optical_rabi if self.optical_rabi_b is None else self.optical_rabi_b


@dataclass(frozen=True)
class SequenceSettings:
    green_duration: float = 1.0
    probe_duration: float = 10.0
    nuclear: str = 'uniform'
    initial: str = 'thermal'
    samples: int = 2

    def sequence(self, segments: Sequence[Segment], signal: bool = True) -> PulseSequence:
        ''' signal sequences must detect somewhere, or every count would be zero '''
        seq = PulseSequence(tuple(segments), InitialState(self.initial))
        if signal and not seq.has_detect:
            raise ValueError('pulse sequence has no detecting segment')
        return seq

    def nuclear_weights(self) -> Dict[int, float]:
        if self.nuclear == 'uniform':
            return {m: 1.0 for m in NUCLEAR_PROJECTIONS}
        m_n = int(self.nuclear)
        return {m: float(m == m_n) for m in NUCLEAR_PROJECTIONS}


@dataclass(frozen=True)
class ScanConfig:
    kind: str
    params: NvParams = NvParams()
    fields: FieldSettings = FieldSettings()
    sequence: SequenceSettings = SequenceSettings()
    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    mode: str = STEADY
    normalization: str = 'raw'
    diffusion_fwhm: float = 0.0
    ple_transition: str = 'both'
    workers: int = 1
    include_ey: bool = False
    include_singlet: bool = False
    echo: Tuple[Tuple[str, str], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f'unknown experiment kind {self.kind!r}')
        if self.step is not None and not self.step > 0:
            raise ValueError('scan step must be > 0')
        if self.start is not None and self.stop is not None and not self.stop > self.start:
            raise ValueError('scan range is empty')

    def with_(self, **changes) -> 'ScanConfig':
        return replace(self, **changes)

    def flags(self, include_ey: Optional[bool] = None) -> BasisFlags:
        ey = self.include_ey if include_ey is None else include_ey
        return BasisFlags(True, ey, self.include_singlet, NUCLEAR_PROJECTIONS)

    def axis(self, default: Tuple[float, float, float]) -> np.ndarray:
        start = default[0] if self.start is None else self.start
        stop = default[1] if self.stop is None else self.stop
        step = default[2] if self.step is None else self.step
        return np.array(grid(start, stop, step))


def _transition_sign(name: str) -> int:
    return 1 if name == 'plus' else -1


def _evaluate(points: Sequence[float], fn: Callable[[float], float], workers: int, label: str) -> np.ndarray:
    ''' Evaluate scan points, concurrently when workers > 1; output keeps input order '''
    progress = ScanProgress(label, len(points))

    def task(x):
        value = fn(x)
        progress.tick()
        return value

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(task, points))
    else:
        values = [task(x) for x in points]
    return np.array(values, dtype=float)


def _finish(cfg: ScanConfig, x: np.ndarray, y: np.ndarray, axis: str, unit: str, **metadata) -> Spectrum:
    # steady states carry round-off of order 1e-17 below zero
    y = np.clip(y, 0.0, None)
    meta = {k: v for k, v in cfg.echo}
    meta.update({'experiment': cfg.kind, 'mode': cfg.mode})
    meta.update({k: str(v) for k, v in metadata.items()})
    spectrum = Spectrum(x, y, axis=axis, unit=unit, signal='counts', metadata=meta)
    if cfg.normalization == 'maxone':
        spectrum = spectrum.normalized()
    return spectrum


# --- field builders -------------------------------------------------------

def lambda_fields(cfg: ScanConfig, delta: float) -> List[DriveField]:
    ''' Field a on −1 <-> A2 scanned so that ω_a − ω_b = δ; field b fixed on +1 <-> A2 '''
    offset = delta - two_photon_resonance(cfg.params, 0)
    a = optical(ground(-1), A2, cfg.fields.optical_rabi, offset, label='optical a')
    b = optical(ground(1), A2, cfg.fields.rabi_b, 0.0, label='optical b')
    return [a, b]


def repump_pumps(cfg: ScanConfig, transition: Optional[str] = None) -> List[PumpField]:
    ''' Incoherent m_s=0 -> ±1 transfer at repump_rabi (MHz); empties the level the Λ fields never touch '''
    if cfg.fields.repump_rabi <= 0:
        return []
    sign = _transition_sign(transition or cfg.fields.repump_transition)
    return [PumpField(ground(0), ground(sign), cfg.fields.repump_rabi, 'repump')]


def dressing_field(rabi: float, offset: float) -> DriveField:
    return microwave(ground(0), ground(1), rabi, offset, label='dressing')


def prep_segment(cfg: ScanConfig) -> List[Segment]:
    ''' π pulse on 0 <-> ±1, resonant with the prep_m_n line; strong prep uses m_n = 0 '''
    f = cfg.fields
    if f.prep == 'none':
        return []
    m_n = f.prep_m_n if f.prep == 'selective' else 0
    pulse = microwave(ground(0), ground(_transition_sign(f.prep_transition)), f.prep_rabi,
                      reference_m_n=m_n, label='prep pi')
    return [Segment(1.0 / (2.0 * f.prep_rabi), (pulse,), label='prep')]


def green_segment(cfg: ScanConfig) -> Segment:
    return Segment(cfg.sequence.green_duration, (), Reset.GREEN, label='green')


# --- signal evaluation ----------------------------------------------------

def steady_counts(cfg: ScanConfig, fields: Sequence[DriveField], flags: Optional[BasisFlags] = None,
                  params: Optional[NvParams] = None, pumps: Sequence[PumpField] = ()) -> float:
    ''' Counts in one probe window at the per-sector steady states '''
    params = params or cfg.params
    flags = flags or cfg.flags()
    weights = cfg.sequence.nuclear_weights()
    total = sum(weights.values())
    excited = 0.0
    for m_n in flags.nuclear:
        w = weights.get(m_n, 0.0) / total
        if w == 0:
            continue
        basis, rho = sector_steady_state(fields, flags, params, m_n, pumps)
        excited += w * excited_population(basis, rho)
    return count_factor(params) * excited * cfg.sequence.probe_duration


def time_counts(cfg: ScanConfig, probe_fields: Sequence[DriveField], flags: Optional[BasisFlags] = None,
                params: Optional[NvParams] = None, pumps: Sequence[PumpField] = ()) -> float:
    ''' green -> prep -> detected probe, summed over nuclear sectors '''
    params = params or cfg.params
    segments = [green_segment(cfg)] + prep_segment(cfg)
    segments.append(Segment(cfg.sequence.probe_duration, tuple(probe_fields), detect=True, label='probe',
                            pumps=tuple(pumps)))
    counts, _ = run_by_sector(cfg.sequence.sequence(segments), flags or cfg.flags(), params,
                              cfg.sequence.nuclear_weights())
    return counts


def prep_populations(cfg: ScanConfig) -> Dict[int, float]:
    ''' Population of the prepared m_s level per m_n sector after green + prep '''
    seq = cfg.sequence.sequence([green_segment(cfg)] + prep_segment(cfg), signal=False)
    _, results = run_by_sector(seq, cfg.flags(), cfg.params)
    target = ground(_transition_sign(cfg.fields.prep_transition))
    out = {}
    for m_n, result in results.items():
        basis = build_basis(BasisFlags(True, cfg.include_ey, cfg.include_singlet, (m_n,)))
        out[m_n] = float(result.rho[basis.lookup(target.at(m_n)), basis.lookup(target.at(m_n))].real)
    return out


# --- experiments ----------------------------------------------------------

def rabi_scan(cfg: ScanConfig) -> Spectrum:
    ''' Counts versus microwave pulse duration: green -> MW(t) -> resonant probe '''
    f = cfg.fields
    x = cfg.axis((0.0, 0.5, 0.0025))
    sign = _transition_sign(f.prep_transition)
    pulse = microwave(ground(0), ground(sign), f.prep_rabi, label='rabi mw')
    if f.readout == 'ey':
        probe = optical(ground(0), EY, f.probe_rabi, label='Ey probe')
        flags = cfg.flags(include_ey=True)
    else:
        probe = optical(ground(sign), A2, f.probe_rabi, label='A2 probe')
        flags = cfg.flags()
    weights = cfg.sequence.nuclear_weights()

    def point(t):
        segments = (green_segment(cfg), Segment(t, (pulse,), label='mw'),
                    Segment(cfg.sequence.probe_duration, (probe,), detect=True, label='probe'))
        counts, _ = run_by_sector(cfg.sequence.sequence(segments), flags, cfg.params, weights)
        return counts

    logger.info('rabi scan: %d durations up to %s, readout %s', len(x), us_to_str(x[-1]), f.readout)
    y = _evaluate(list(x), point, cfg.workers, 'rabi')
    return _finish(cfg, x, y, 'mw_duration', 'us', readout=f.readout, mw_rabi=f.prep_rabi)


def ple_trace(cfg: ScanConfig, m_s: int, x: np.ndarray) -> np.ndarray:
    ''' Ideal steady-state PLE of the m_s <-> A2 line, CW microwaves on both ground transitions '''
    params = cfg.params
    midpoint = level_energy(params, A2.at(0)) - 0.5 * (
        level_energy(params, ground(1).at(0)) + level_energy(params, ground(-1).at(0)))
    line = level_energy(params, A2.at(0)) - level_energy(params, ground(m_s).at(0))
    mws = [microwave(ground(0), ground(s), cfg.fields.ple_mw_rabi, label=f'cw mw {s:+d}')
           for s in (m_s, -m_s)]

    def point(detuning):
        probe = optical(ground(m_s), A2, cfg.fields.probe_rabi, midpoint + detuning - line, label='laser')
        return steady_counts(cfg, [probe] + mws)

    return _evaluate(list(x), point, cfg.workers, f'ple {m_s:+d}')


def diffuse(y: np.ndarray, step: float, fwhm: float) -> np.ndarray:
    ''' Gaussian spectral-diffusion broadening of a uniformly sampled trace '''
    if fwhm <= 0:
        return y
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0))) / step
    return gaussian_filter1d(y, sigma, mode='nearest')


def ple_scan(cfg: ScanConfig) -> Spectrum:
    ''' Laser detuning from the midpoint of the two A2 lines; peaks at ∓Δ_Z/2 '''
    half = 0.5 * abs(cfg.params.zeeman_split)
    reach = half + max(3.0 * cfg.diffusion_fwhm, 10.0 * cfg.params.gamma_rad)
    x = cfg.axis((-reach, reach, max(cfg.diffusion_fwhm / 100.0, cfg.params.gamma_rad / 20.0)))
    transitions = {'both': (-1, 1), 'minus': (-1,), 'plus': (1,)}[cfg.ple_transition]
    logger.info('ple scan: %d points, transitions %s', len(x), transitions)
    y = sum(ple_trace(cfg, m_s, x) for m_s in transitions)
    step = float(np.median(np.diff(x)))
    y = diffuse(y, step, cfg.diffusion_fwhm)
    return _finish(cfg, x, y, 'laser_detuning', 'MHz', transitions=cfg.ple_transition,
                   diffusion_fwhm=cfg.diffusion_fwhm)


def cpt_default_axis(cfg: ScanConfig) -> Tuple[float, float, float]:
    center = two_photon_resonance(cfg.params, 0)
    return center - 15.0, center + 15.0, 0.1


def _cpt_signal(cfg: ScanConfig, extra: Sequence[DriveField], params: Optional[NvParams] = None,
                pumps: Sequence[PumpField] = ()):
    counts = time_counts if cfg.mode == TIME else steady_counts
    return lambda delta: counts(cfg, lambda_fields(cfg, delta) + list(extra), params=params, pumps=pumps)


def cpt_scan(cfg: ScanConfig) -> Spectrum:
    ''' Fluorescence versus δ = ω_a − ω_b; dips at Δ_Z + 2A·m_n '''
    x = cfg.axis(cpt_default_axis(cfg))
    logger.info('cpt scan: %d points, %s mode', len(x), cfg.mode)
    y = _evaluate(list(x), _cpt_signal(cfg, [], pumps=repump_pumps(cfg)), cfg.workers, 'cpt')
    meta = {'nuclear_weights': cfg.sequence.nuclear_weights()}
    if cfg.mode == TIME and cfg.fields.prep != 'none':
        meta['prepared_population'] = prep_populations(cfg)
    return _finish(cfg, x, y, 'two_photon_detuning', 'MHz', **meta)


def cpt_background(cfg: ScanConfig) -> Spectrum:
    ''' The same scan with the ±1 coherence destroyed: the one-photon profile without CPT '''
    incoherent = cfg.params.with_(ground_dephase=INCOHERENT_DEPHASING)
    x = cfg.axis(cpt_default_axis(cfg))
    y = _evaluate(list(x), _cpt_signal(cfg, [], incoherent, repump_pumps(cfg)), cfg.workers, 'cpt background')
    return _finish(cfg, x, y, 'two_photon_detuning', 'MHz', background='incoherent')


def cpt_contrast(cfg: ScanConfig) -> Spectrum:
    ''' background − signal: the CPT dips alone, as positive peaks '''
    signal = cpt_scan(cfg.with_(normalization='raw'))
    background = cpt_background(cfg.with_(normalization='raw'))
    return _finish(cfg, signal.x, background.y - signal.y, 'two_photon_detuning', 'MHz', contrast='yes')


def measure_dip_width(cfg: ScanConfig) -> float:
    ''' FWHM of the CPT feature from a single-Lorentzian fit to the contrast around its maximum

        Raises FitError when there is no contrast or the fit does not converge.
    '''
    contrast = cpt_contrast(cfg)
    top = float(np.max(contrast.y))
    if not top > 0:
        raise FitError('no CPT contrast to measure a width from')
    center = float(contrast.x[int(np.argmax(contrast.y))])
    width0 = max(peak_fwhm(contrast), 2 * contrast.step)
    reach = max(2.5 * width0, 5 * contrast.step)
    window = np.abs(contrast.x - center) <= reach
    # lifted by top so the fitted model stays positive
    inverted = Spectrum(contrast.x[window], 2 * top - contrast.y[window])
    model = FitModel(2 * top, (LorentzianDip(center, width0, top),))
    result = fit(model, inverted)
    if not result.converged:
        raise FitError(f'width fit did not converge after {result.iterations} iterations')
    width = result.model.dips[0].fwhm
    logger.info('cpt dip width %s (start %s)', mhz_to_str(width), mhz_to_str(width0))
    return width


def stark_settings(cfg: ScanConfig) -> List[Tuple[float, float]]:
    ''' (Ω_mw, offset above the m_n=0 line) per trace '''
    f = cfg.fields
    if f.mw_rabi_list:
        return [(rabi, f.mw_detuning) for rabi in f.mw_rabi_list]
    if f.mw_detuning_list:
        return [(f.mw_rabi, offset) for offset in f.mw_detuning_list]
    return [(f.mw_rabi, f.mw_detuning)]


def stark_scan(cfg: ScanConfig) -> List[Spectrum]:
    ''' One CPT scan per dressing setting; the dressing microwave is on while probing '''
    out = []
    x = cfg.axis(cpt_default_axis(cfg))
    for index, (rabi, offset) in enumerate(stark_settings(cfg)):
        if rabi > 0:
            extra, pumps = [dressing_field(rabi, offset)], []
        else:
            # the dressing itself empties m_s=0; without it a 0 -> +1 pump does
            extra, pumps = [], repump_pumps(cfg, 'plus')
        logger.info('stark trace %d: rabi %s, offset %s', index, mhz_to_str(rabi), mhz_to_str(offset))
        y = _evaluate(list(x), _cpt_signal(cfg, extra, pumps=pumps), cfg.workers, f'stark {index}')
        dressing = dressing_from_offset(cfg.params, rabi, offset)
        predicted = dip_positions(cfg.params, dressing)
        out.append(_finish(cfg, x, y, 'two_photon_detuning', 'MHz',
                           setting=index, mw_rabi=rabi, mw_offset=offset,
                           mw_detunings={m: round(d, 9) for m, d in dressing.detunings},
                           predicted_dips=[round(p, 6) for p in predicted.positions()]))
    return out


def run_experiment(cfg: ScanConfig) -> List[Spectrum]:
    if cfg.kind == 'rabi':
        return [rabi_scan(cfg)]
    if cfg.kind == 'ple':
        return [ple_scan(cfg)]
    if cfg.kind == 'cpt':
        return [cpt_scan(cfg)]
    return stark_scan(cfg)
