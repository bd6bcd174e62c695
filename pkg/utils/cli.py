'''Command line interface: run experiments, print dressed dips, fit spectra, self-test'''

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Tuple

from .config import Config, fit_options, load_config, scan_config
from .dressed import dip_positions, dressing_from_offset
from .errors import ConfigError, NumericalError, NvSimError
from .experiments import run_experiment, stark_settings
from .files import indexed_path, read_spectrum, silent_remove, write_fit, write_spectrum
from .fitting import fit_cpt
from .helpers import parse_float_list, sig9
from .log import setup_logging
from .levels import NUCLEAR_PROJECTIONS
from .nv_params import two_photon_resonance
from .selftest import run_selftest
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

EXPERIMENTS = ('rabi', 'ple', 'cpt', 'stark')
EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2


class UsageError(ConfigError):
    def __init__(self, message: str, usage: str):
        self.usage = usage
        ConfigError.__init__(self, message)


class _Parser(argparse.ArgumentParser):
    ''' argparse reports usage errors through ConfigError so they exit with code 1 '''

    def error(self, message):
        raise UsageError(message, self.format_usage())


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--config', type=str, default=None, help='Path to a configuration file')
    common.add_argument('--out', type=str, default=None, help='Output file (default: stdout)')
    common.add_argument('--set', action='append', default=[], dest='overrides', metavar='SECTION.KEY=VALUE',
                        help='Override one configuration key; repeatable')
    common.add_argument('--mode', choices=('steady', 'time'), default=None,
                        help='Steady-state or time-domain evaluation')
    common.add_argument('--verbose', action='store_true', help='Debug logging and tracebacks')
    common.add_argument('--log-file', type=str, default=None, help='Write the log to this file')

    parser = _Parser(prog='nv-cpt-sim', description='Simulate and fit nuclear-spin resolved CPT spectra of an NV center')
    sub = parser.add_subparsers(dest='command', required=True)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=f'run the {name} experiment')
    sub.add_parser('dips', parents=[common], help='print the analytic dressed dip positions')
    fit_parser = sub.add_parser('fit', parents=[common], help='fit Lorentzian dips to a spectrum file')
    fit_parser.add_argument('spectrum', type=str, help='CSV spectrum written by an experiment')
    fit_parser.add_argument('--centers', type=str, default=None,
                            help='"theory" or a comma-separated list of centers in MHz')
    sub.add_parser('selftest', parents=[common], help='run the invariant suite and the shipped configs')
    return parser


@contextmanager
def _sink(path: Optional[Path]):
    ''' Text sink for one output; a partial file is removed when writing fails '''
    if path is None:
        yield sys.stdout
        return
    try:
        with open(path, 'w', encoding='utf-8') as f:
            yield f
    except BaseException:
        silent_remove(path)
        raise


def _load(args) -> Config:
    overrides = list(args.overrides)
    if args.mode:
        overrides.append(f'scan.mode={args.mode}')
    return load_config(args.config, overrides)


def _write_spectra(spectra: Sequence[Spectrum], out: Optional[str]):
    if out is None:
        for k, spectrum in enumerate(spectra):
            if k:
                sys.stdout.write('\n')
            write_spectrum(spectrum, sys.stdout)
        return
    for k, spectrum in enumerate(spectra):
        path = indexed_path(out, k) if len(spectra) > 1 else Path(out)
        with _sink(path) as sink:
            write_spectrum(spectrum, sink)
        logger.info('wrote %s', path)


def run_experiment_command(args) -> int:
    config = _load(args)
    cfg = scan_config(config, args.command)
    spectra = run_experiment(cfg)
    _write_spectra(spectra, args.out)
    return EXIT_OK


def run_dips(args) -> int:
    config = _load(args)
    cfg = scan_config(config, 'stark')
    lines = ['setting,mw_rabi,mw_offset,m_n,branch,position_mhz,weight']
    for k, (rabi, offset) in enumerate(stark_settings(cfg)):
        dips = dip_positions(cfg.params, dressing_from_offset(cfg.params, rabi, offset))
        for dip in dips:
            lines.append(f'{k},{sig9(rabi)},{sig9(offset)},{dip.m_n:+d},{dip.branch},'
                         f'{sig9(dip.position)},{sig9(dip.weight)}')
    with _sink(Path(args.out) if args.out else None) as sink:
        sink.write('\n'.join(lines) + '\n')
    return EXIT_OK


def theory_centers(config: Config, spectrum: Spectrum) -> Tuple[List[float], Optional[List[float]]]:
    ''' Visible dressed dips and their weights, or the bare CPT resonances with no weights

        A spectrum written by the stark experiment carries its own dressing, which
        wins over the configuration.
    '''
    cfg = scan_config(config, 'stark')
    meta = spectrum.metadata
    if 'mw_rabi' in meta and 'mw_offset' in meta:
        rabi, offset = float(meta['mw_rabi']), float(meta['mw_offset'])
    elif meta.get('predicted_dips'):
        return parse_float_list(meta['predicted_dips'].strip('[]')), None
    else:
        rabi, offset = cfg.fields.mw_rabi, cfg.fields.mw_detuning
    if rabi > 0:
        visible = dip_positions(cfg.params, dressing_from_offset(cfg.params, rabi, offset)).visible()
        return [d.position for d in visible], [d.weight for d in visible]
    return [two_photon_resonance(cfg.params, m) for m in NUCLEAR_PROJECTIONS], None


def run_fit(args) -> int:
    config = _load(args)
    spectrum = read_spectrum(args.spectrum)
    source = args.centers if args.centers is not None else config.get('fit', 'centers')
    weights = None
    if source == 'theory':
        centers, weights = theory_centers(config, spectrum)
    elif isinstance(source, tuple):
        centers = list(source)
    else:
        try:
            centers = parse_float_list(source)
        except ValueError:
            raise ConfigError(f'--centers expects "theory" or numbers, got {source!r}') from None
    if weights is None:
        centers = sorted(centers)
    result = fit_cpt(spectrum, centers, weights, linear_baseline=config.get('fit', 'linear_baseline'),
                     options=fit_options(config))
    metadata = {'source': args.spectrum, 'centers': ','.join(sig9(c) for c in centers)}
    with _sink(Path(args.out) if args.out else None) as sink:
        write_fit(result, sink, metadata)
    return EXIT_OK


def run_selftest_command(args) -> int:
    lines = []
    results = run_selftest()
    for check in results:
        lines.append(f'{"PASS" if check.passed else "FAIL"} {check.name}: {check.detail}')
    failed = sum(not c.passed for c in results)
    lines.append(f'{len(results) - failed}/{len(results)} checks passed')
    with _sink(Path(args.out) if args.out else None) as sink:
        sink.write('\n'.join(lines) + '\n')
    return EXIT_OK if failed == 0 else EXIT_NUMERICAL


def main(argv: Optional[Sequence[str]] = None, stderr: Optional[TextIO] = None) -> int:
    ''' Entry point; returns the process exit code '''
    stderr = stderr or sys.stderr
    verbose = False
    try:
        args = build_parser().parse_args(argv)
        verbose = args.verbose
        setup_logging(logging.DEBUG if verbose else logging.WARNING, args.log_file)
        if args.command in EXPERIMENTS:
            return run_experiment_command(args)
        if args.command == 'dips':
            return run_dips(args)
        if args.command == 'fit':
            return run_fit(args)
        return run_selftest_command(args)
    except NumericalError as err:
        logger.debug('numerical failure', exc_info=True)
        print(f'nv-cpt-sim: numerical error: {err}', file=stderr)
        return EXIT_NUMERICAL
    except (NvSimError, ValueError) as err:
        if verbose:
            logger.exception('invalid input')
        if isinstance(err, UsageError):
            stderr.write(err.usage)
        print(f'nv-cpt-sim: {err}', file=stderr)
        return EXIT_INVALID
