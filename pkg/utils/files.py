''' Result file writers and readers (CSV spectra, fit reports) '''

from pathlib import Path
from typing import Dict, List, Optional, TextIO, Union

import numpy as np

from .errors import ConfigError
from .fitting import FitResult
from .helpers import sig9
from .spectrum import Spectrum

FORMAT_HEADER = '# nv-cpt-sim v1'


def _metadata_lines(metadata: Dict[str, str]) -> List[str]:
    return [f'# {key} = {value}' for key, value in metadata.items()]


def write_spectrum(spectrum: Spectrum, sink: TextIO) -> None:
    '''Write a spectrum as CSV with '#' metadata lines on top

    Args:
        spectrum: the samples to write, in x order
        sink: an open text stream

    Returns:
        None; values are formatted with 9 significant digits
    '''
    lines = [FORMAT_HEADER, f'# axis = {spectrum.axis}', f'# unit = {spectrum.unit}',
             f'# signal = {spectrum.signal}']
    lines.extend(_metadata_lines(spectrum.metadata))
    lines.append(f'x_{spectrum.unit.lower()},{spectrum.signal}')
    lines.extend(f'{sig9(x)},{sig9(y)}' for x, y in zip(spectrum.x, spectrum.y))
    sink.write('\n'.join(lines) + '\n')


def read_spectrum(source: Union[str, Path, TextIO]) -> Spectrum:
    ''' Read back what write_spectrum wrote; also accepts plain two-column CSV '''
    if isinstance(source, (str, Path)):
        try:
            with open(source, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as err:
            raise ConfigError(f'cannot read spectrum {source}: {err.strerror}') from None
    else:
        text = source.read()
    header = {}
    xs, ys = [], []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            if '=' in line:
                key, value = line[1:].split('=', 1)
                header[key.strip()] = value.strip()
            continue
        cells = [c.strip() for c in line.split(',')]
        try:
            x, y = float(cells[0]), float(cells[1])
        except (ValueError, IndexError):
            if not xs:
                continue  # column header
            raise ConfigError(f'bad data row {line!r}', number) from None
        xs.append(x)
        ys.append(y)
    axis = header.pop('axis', 'two_photon_detuning')
    unit = header.pop('unit', 'MHz')
    signal = header.pop('signal', 'counts')
    try:
        return Spectrum(np.array(xs), np.array(ys), axis, unit, signal, header)
    except ValueError as err:
        raise ConfigError(f'invalid spectrum: {err}') from None


def write_fit(result: FitResult, sink: TextIO, metadata: Optional[Dict[str, str]] = None) -> None:
    ''' One record per dip in ascending center order, then baseline and RSS '''
    lines = [FORMAT_HEADER, '# fit = multi-lorentzian']
    lines.extend(_metadata_lines(metadata or {}))
    lines.append(f'# converged = {str(result.converged).lower()}')
    lines.append(f'# iterations = {result.iterations}')
    lines.append('dip,center_mhz,center_err,fwhm_mhz,fwhm_err,depth,depth_err')
    model = result.model
    order = sorted(range(len(model.dips)), key=lambda k: model.dips[k].center)
    for rank, k in enumerate(order):
        dip = model.dips[k]
        errors = [result.stderr.get(f'{name}{k}', 0.0) for name in ('center', 'fwhm', 'depth')]
        lines.append(','.join([str(rank), sig9(dip.center), sig9(errors[0]), sig9(dip.fwhm),
                               sig9(errors[1]), sig9(dip.depth), sig9(errors[2])]))
    lines.append(f'baseline,{sig9(model.baseline)},{sig9(result.stderr.get("baseline", 0.0))}')
    if model.linear_baseline:
        lines.append(f'slope,{sig9(model.slope)},{sig9(result.stderr.get("slope", 0.0))}')
    lines.append(f'rss,{sig9(result.rss)}')
    sink.write('\n'.join(lines) + '\n')


def indexed_path(path: Union[str, Path], index: int) -> Path:
    ''' out.csv -> out_0.csv, for experiments that produce several spectra '''
    path = Path(path)
    return path.with_name(f'{path.stem}_{index}{path.suffix}')


def silent_remove(path: Union[Path, str]) -> None:
    '''Remove a partially written output file without raising

    Args:
        path: Path to file to remove (Path object or string)
    '''
    try:
        Path(path).unlink()
    except (FileNotFoundError, PermissionError, IsADirectoryError, OSError):
        pass
