''' Spectrum container and the dip/peak locators used on simulated spectra '''
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks, peak_widths

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Spectrum:
    '''Ordered (x, signal) samples with axis metadata'''
    x: np.ndarray
    y: np.ndarray
    axis: str = 'two_photon_detuning'
    unit: str = 'MHz'
    signal: str = 'counts'
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError('x and y must be 1-d arrays of the same length')
        if len(x) < 2:
            raise ValueError('a spectrum needs at least two samples')
        if np.any(np.diff(x) <= 0):
            raise ValueError('x must be strictly increasing')
        if not np.all(np.isfinite(y)):
            raise ValueError('signal must be finite')
        if np.any(y < 0):
            raise ValueError('signal must be >= 0')

    def __len__(self):
        return len(self.x)

    @property
    def step(self) -> float:
        return float(np.median(np.diff(self.x)))

    def normalized(self) -> 'Spectrum':
        ''' MaxOne normalization '''
        peak = float(np.max(self.y))
        y = self.y / peak if peak > 0 else self.y.copy()
        return replace(self, y=y, signal='normalized')

    def shifted(self, offset: float) -> 'Spectrum':
        return replace(self, x=self.x + offset)

    def with_metadata(self, **items) -> 'Spectrum':
        merged = dict(self.metadata)
        merged.update({k: str(v) for k, v in items.items()})
        return replace(self, metadata=merged)


class Dip(NamedTuple):
    center: float
    depth: float


@dataclass
class DipSearch:
    ''' Dips sorted by center; incomplete is set when fewer than count_hint were found '''
    dips: List[Dip]
    incomplete: bool = False

    def __iter__(self):
        return iter(self.dips)

    def __len__(self):
        return len(self.dips)

    def __getitem__(self, i):
        return self.dips[i]

    @property
    def centers(self) -> List[float]:
        return [d.center for d in self.dips]


def _parabolic_vertex(x: np.ndarray, y: np.ndarray, i: int) -> float:
    ''' Three-point parabola through samples i-1, i, i+1 (uniform or not) '''
    x0, x1, x2 = x[i - 1], x[i], x[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom
    if a <= 0:
        return float(x1)
    vertex = -b / (2 * a)
    return float(min(max(vertex, x0), x2))


def find_dips(spectrum: Spectrum, count_hint: int = 0, min_prominence: float = 1e-3) -> DipSearch:
    ''' Local minima refined by a three-point parabola; depth is the prominence

        min_prominence is relative to the signal range; a flat spectrum has no dips.
    '''
    y = spectrum.y
    span = float(np.max(y) - np.min(y))
    if span <= 1e-12 * max(float(np.max(np.abs(y))), 1e-300):
        dips = []
    else:
        idx, props = find_peaks(-y, prominence=min_prominence * span)
        dips = [Dip(_parabolic_vertex(spectrum.x, y, i), float(p))
                for i, p in zip(idx, props['prominences'])]
    dips.sort(key=lambda d: d.center)
    incomplete = len(dips) < count_hint
    if incomplete:
        logger.warning('found %d dips, expected %d', len(dips), count_hint)
    return DipSearch(dips, incomplete)


def strongest(search: DipSearch, count: int) -> List[Dip]:
    ''' The count deepest dips, returned in center order '''
    deepest = sorted(search.dips, key=lambda d: d.depth, reverse=True)[:count]
    return sorted(deepest, key=lambda d: d.center)


def find_peak(spectrum: Spectrum) -> float:
    ''' Parabolically refined position of the global maximum '''
    i = int(np.argmax(spectrum.y))
    if i == 0 or i == len(spectrum) - 1:
        return float(spectrum.x[i])
    return _parabolic_vertex(spectrum.x, -spectrum.y, i)


def peak_fwhm(spectrum: Spectrum, baseline: Optional[float] = None) -> float:
    ''' Full width at half maximum of the global peak, by linear interpolation '''
    y = spectrum.y - (float(np.min(spectrum.y)) if baseline is None else baseline)
    i = int(np.argmax(y))
    widths, _, _, _ = peak_widths(y, [i], rel_height=0.5)
    return float(widths[0] * spectrum.step)
