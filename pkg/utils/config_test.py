'''Tests for config.py module'''
import math
from pathlib import Path

import pytest

from utils.config import load_config, optical_rabi, parse_config, scan_config
from utils.errors import ConfigError

CONFIGS = Path(__file__).resolve().parent.parent / 'configs'

SAMPLE = '''
# sample
[model]
zeeman_split = 40      # MHz
include_ey = yes

[fields]
mw_rabi_list = 2, 4,6

[scan]
start = 30
stop = 50
'''


def test_defaults():
    config = parse_config('')
    assert config.get('model', 'hyperfine_a') == -2.2
    assert config.get('scan', 'start') is None
    assert config.get('fit', 'centers') == 'theory'
    assert config.origin == {}


def test_values_and_lines():
    config = parse_config(SAMPLE)
    assert config.get('model', 'zeeman_split') == 40.0
    assert config.get('model', 'include_ey') is True
    assert config.get('fields', 'mw_rabi_list') == (2.0, 4.0, 6.0)
    assert config.origin[('model', 'zeeman_split')] == 4


def test_unknown_key_names_the_line():
    with pytest.raises(ConfigError) as err:
        parse_config('[model]\n\nzeman_split = 3\n')
    assert err.value.line == 3
    assert str(err.value).startswith('line 3: zeman_split:')


def test_non_numeric_value():
    with pytest.raises(ConfigError) as err:
        parse_config('[model]\ngamma_rad = fast\n')
    assert 'not a number' in str(err.value)
    assert err.value.key == 'gamma_rad'


@pytest.mark.parametrize('line', ['leak_branch = 1', 'gamma_rad = -2', 'collection_eff = 2', 'zfs = inf'])
def test_out_of_range(line):
    with pytest.raises(ConfigError) as err:
        parse_config('[model]\n' + line + '\n')
    assert err.value.line == 2


@pytest.mark.parametrize('text', ['zeeman_split = 3\n', '[model\n', '[nonsense]\n', '[model]\nzeeman_split\n',
                                  '[model]\nzeeman_split =\n', '[scan]\nstart = 5\nstop = 1\n',
                                  '[sequence]\nnuclear = 2\n', '[scan]\nmode = fast\n'])
def test_invalid_text(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_overrides_win_and_report_as_set():
    config = parse_config(SAMPLE, ['model.zeeman_split=25', 'scan.mode=time'])
    assert config.get('model', 'zeeman_split') == 25.0
    assert config.origin[('model', 'zeeman_split')] == 0
    with pytest.raises(ConfigError) as err:
        parse_config(SAMPLE, ['model.gamma_rad=oops'])
    assert str(err.value).startswith('--set: gamma_rad:')
    with pytest.raises(ConfigError):
        parse_config('', ['zeeman_split=3'])


def test_power_calibration():
    '''Each field carries half of the total power'''
    config = parse_config('[fields]\noptical_power_uw = 2\nrabi_per_sqrt_uw = 10\n')
    assert optical_rabi(config) == pytest.approx((10.0, 10.0))
    config = parse_config('[fields]\noptical_rabi = 1\noptical_rabi_b = 3\n')
    assert optical_rabi(config) == (1.0, 3.0)


def test_scan_config_carries_everything():
    cfg = scan_config(parse_config(SAMPLE, ['sequence.nuclear=+1']), 'stark')
    assert cfg.params.zeeman_split == 40.0
    assert cfg.include_ey
    assert cfg.fields.mw_rabi_list == (2.0, 4.0, 6.0)
    assert cfg.sequence.nuclear_weights() == {-1: 0.0, 0: 0.0, 1: 1.0}
    assert (cfg.start, cfg.stop, cfg.step) == (30.0, 50.0, None)
    assert ('model.zeeman_split', '40') in cfg.echo


def test_echo_skips_unset_keys():
    keys = [k for k, _ in parse_config('').echo()]
    assert 'scan.start' not in keys
    assert 'fields.optical_power_uw' not in keys
    assert 'model.zfs' in keys


@pytest.mark.parametrize('path', sorted(CONFIGS.glob('*.conf')), ids=lambda p: p.name)
def test_shipped_configs_parse(path):
    config = load_config(str(path))
    assert config.get('scan', 'experiment') in ('rabi', 'ple', 'cpt', 'stark')


def test_shipped_config_set():
    names = sorted(p.name for p in CONFIGS.glob('*.conf'))
    assert names == ['fig1b.conf', 'fig1c.conf', 'fig2a.conf', 'fig2c.conf', 'fig2e.conf', 'fig3a.conf',
                     'fig3b.conf']


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config('/nonexistent/none.conf')


def test_fig2a_calibration():
    rabi, _ = optical_rabi(load_config(str(CONFIGS / 'fig2a.conf')))
    assert rabi == pytest.approx(13.5 * math.sqrt(0.5))
