''' Sectioned key = value configuration with line-anchored diagnostics

    [model]
    zeeman_split = 30        # comments run to the end of the line

    Overrides come as section.key=value and are applied after the file.
'''
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Tuple

from .errors import ConfigError
from .experiments import FieldSettings, ScanConfig, SequenceSettings
from .fitting import FitOptions
from .helpers import parse_float_list
from .nv_params import NvParams

logger = logging.getLogger(__name__)


def _number(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError('not finite')
    return value


def _real(text):
    return _number(text)


def _non_negative(text):
    value = _number(text)
    if value < 0:
        raise ValueError('must be >= 0')
    return value


def _positive(text):
    value = _number(text)
    if value <= 0:
        raise ValueError('must be > 0')
    return value


def _unit(text):
    value = _number(text)
    if not 0 <= value <= 1:
        raise ValueError('must be in [0, 1]')
    return value


def _leak(text):
    value = _number(text)
    if not 0 <= value < 1:
        raise ValueError('must be in [0, 1)')
    return value


def _count(text):
    value = int(text)
    if value < 0:
        raise ValueError('must be >= 0')
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise ValueError('must be >= 1')
    return value


def _flag(text):
    lowered = text.lower()
    if lowered in ('true', 'yes', 'on', '1'):
        return True
    if lowered in ('false', 'no', 'off', '0'):
        return False
    raise ValueError('expected true or false')


def _list(text):
    values = parse_float_list(text)
    if not all(math.isfinite(v) for v in values):
        raise ValueError('not finite')
    return tuple(values)


def _nuclear_m(text):
    value = int(text)
    if value not in (-1, 0, 1):
        raise ValueError('must be -1, 0 or +1')
    return value


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text):
        if text not in options:
            raise ValueError('expected one of ' + ', '.join(options))
        return text
    return parse


def _nuclear(text):
    if text == 'uniform':
        return text
    return str(_nuclear_m(text))


def _centers(text):
    if text == 'theory':
        return text
    return _list(text)


# section -> key -> (parser, default); None means unset
SCHEMA: Dict[str, Dict[str, Tuple[Callable[[str], Any], Any]]] = {
    'model': {
        'zeeman_split': (_real, 30.0),
        'hyperfine_a': (_real, -2.2),
        'quadrupole_q': (_real, 5.0),
        'zfs': (_non_negative, 2870.0),
        'gamma_rad': (_non_negative, 13.0),
        'leak_branch': (_leak, 0.02),
        'ground_dephase': (_non_negative, 0.1),
        'green_polarization_p': (_unit, 0.9),
        'collection_eff': (_unit, 0.01),
        'ey_offset': (_real, 3000.0),
        'singlet_rate': (_non_negative, 0.5),
        'include_ey': (_flag, False),
        'include_singlet': (_flag, False),
    },
    'fields': {
        'optical_rabi': (_non_negative, 2.5),
        'optical_rabi_b': (_non_negative, None),
        'optical_power_uw': (_non_negative, None),
        'rabi_per_sqrt_uw': (_positive, 13.5),
        'repump_rabi': (_non_negative, 0.2),
        'repump_transition': (_choice('minus', 'plus'), 'minus'),
        'prep': (_choice('none', 'strong', 'selective'), 'strong'),
        'prep_transition': (_choice('plus', 'minus'), 'plus'),
        'prep_rabi': (_positive, 5.0),
        'prep_m_n': (_nuclear_m, 0),
        'mw_rabi': (_non_negative, 0.0),
        'mw_detuning': (_real, 0.0),
        'mw_rabi_list': (_list, ()),
        'mw_detuning_list': (_list, ()),
        'readout': (_choice('a2', 'ey'), 'a2'),
        'probe_rabi': (_non_negative, 2.0),
        'ple_mw_rabi': (_non_negative, 1.0),
    },
    'sequence': {
        'green_duration': (_non_negative, 1.0),
        'probe_duration': (_positive, 10.0),
        'nuclear': (_nuclear, 'uniform'),
        'initial': (_choice('thermal', 'mixed'), 'thermal'),
        'samples': (_positive_int, 2),
    },
    'scan': {
        'experiment': (_choice('rabi', 'ple', 'cpt', 'stark'), None),
        'start': (_real, None),
        'stop': (_real, None),
        'step': (_positive, None),
        'mode': (_choice('steady', 'time'), 'steady'),
        'normalization': (_choice('raw', 'maxone'), 'raw'),
        'diffusion_fwhm': (_non_negative, 0.0),
        'ple_transition': (_choice('both', 'minus', 'plus'), 'both'),
        'workers': (_positive_int, 1),
    },
    'fit': {
        'centers': (_centers, 'theory'),
        'linear_baseline': (_flag, False),
        'max_iterations': (_positive_int, 500),
        'count_hint': (_count, 0),
    },
}


@dataclass
class Config:
    ''' Parsed values per section, plus the line each explicit key came from '''
    values: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    origin: Dict[Tuple[str, str], int] = field(default_factory=dict)

    def get(self, section: str, key: str) -> Any:
        return self.values[section][key]

    def echo(self) -> List[Tuple[str, str]]:
        ''' Every resolved key as (section.key, text), unset keys omitted '''
        out = []
        for section, keys in SCHEMA.items():
            for key in keys:
                value = self.values[section][key]
                if value is None:
                    continue
                if isinstance(value, tuple):
                    text = ','.join(f'{v:g}' for v in value)
                elif isinstance(value, bool):
                    text = 'true' if value else 'false'
                elif isinstance(value, float):
                    text = f'{value:g}'
                else:
                    text = str(value)
                out.append((f'{section}.{key}', text))
        return out


def _defaults() -> Config:
    return Config({section: {k: d for k, (_, d) in keys.items()} for section, keys in SCHEMA.items()})


def _assign(config: Config, section: str, key: str, text: str, line: int):
    if section not in SCHEMA:
        raise ConfigError(f'unknown section [{section}]', line)
    if key not in SCHEMA[section]:
        raise ConfigError(f'unknown key in [{section}]', line, key)
    if text == '':
        raise ConfigError('missing value', line, key)
    parser, _ = SCHEMA[section][key]
    try:
        value = parser(text)
    except ValueError as err:
        reason = str(err)
        if 'could not convert' in reason or 'invalid literal' in reason:
            reason = f'not a number: {text!r}'
        raise ConfigError(reason, line, key) from None
    config.values[section][key] = value
    config.origin[(section, key)] = line


def parse_config(text: str, overrides: Iterable[str] = ()) -> Config:
    ''' Parse configuration text, then apply section.key=value overrides (line 0) '''
    config = _defaults()
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if line.startswith('['):
            if not line.endswith(']'):
                raise ConfigError(f'malformed section header {line!r}', number)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f'unknown section [{section}]', number)
            continue
        if '=' not in line:
            raise ConfigError(f'expected key = value, got {line!r}', number)
        if section is None:
            raise ConfigError('key outside any [section]', number)
        key, value = (part.strip() for part in line.split('=', 1))
        _assign(config, section, key, value, number)

    for item in overrides:
        if '=' not in item or '.' not in item.split('=', 1)[0]:
            raise ConfigError(f'expected section.key=value, got {item!r}', 0)
        dotted, value = item.split('=', 1)
        section, key = (part.strip() for part in dotted.split('.', 1))
        _assign(config, section, key, value.strip(), 0)
    _cross_check(config)
    return config


def _cross_check(config: Config):
    scan = config.values['scan']
    if scan['start'] is not None and scan['stop'] is not None and not scan['stop'] > scan['start']:
        raise ConfigError('stop must be greater than start', config.origin.get(('scan', 'stop')), 'stop')
    if config.values['fields']['readout'] == 'ey' and config.values['fields']['probe_rabi'] == 0:
        raise ConfigError('Ey readout needs probe_rabi > 0', config.origin.get(('fields', 'probe_rabi')),
                          'probe_rabi')


def load_config(path: Optional[str], overrides: Iterable[str] = ()) -> Config:
    ''' Read a config file (or just defaults when path is None) '''
    text = ''
    if path is not None:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                text = f.read()
        except OSError as err:
            raise ConfigError(f'cannot read {path}: {err.strerror}') from None
    config = parse_config(text, overrides)
    logger.info('configuration %s: %d explicit keys', path or '<defaults>', len(config.origin))
    return config


def optical_rabi(config: Config) -> Tuple[float, float]:
    ''' (Ω_a, Ω_b); a total optical power split evenly between the two fields overrides both '''
    f = config.values['fields']
    power = f['optical_power_uw']
    if power is not None:
        rabi = f['rabi_per_sqrt_uw'] * math.sqrt(0.5 * power)
        return rabi, rabi
    a = f['optical_rabi']
    return a, a if f['optical_rabi_b'] is None else f['optical_rabi_b']


def model_params(config: Config) -> NvParams:
    m = config.values['model']
    return NvParams(**{k: v for k, v in m.items() if k not in ('include_ey', 'include_singlet')})


def scan_config(config: Config, kind: str) -> ScanConfig:
    ''' Assemble the ScanConfig of one experiment from the parsed sections '''
    f = config.values['fields']
    rabi_a, rabi_b = optical_rabi(config)
    fields = FieldSettings(
        optical_rabi=rabi_a, optical_rabi_b=rabi_b,
        **{k: f[k] for k in ('repump_rabi', 'repump_transition', 'prep', 'prep_transition', 'prep_rabi',
                             'prep_m_n', 'mw_rabi', 'mw_detuning', 'mw_rabi_list', 'mw_detuning_list',
                             'readout', 'probe_rabi', 'ple_mw_rabi')})
    sequence = SequenceSettings(**config.values['sequence'])
    s = {k: v for k, v in config.values['scan'].items() if k != 'experiment'}
    m = config.values['model']
    return ScanConfig(kind=kind, params=model_params(config), fields=fields, sequence=sequence,
                      include_ey=m['include_ey'], include_singlet=m['include_singlet'],
                      echo=tuple(config.echo()), **s)


def fit_options(config: Config) -> FitOptions:
    return FitOptions(max_iterations=config.values['fit']['max_iterations'])
