''' Small formatting helpers shared by the writers and the CLI '''
import math


def sig9(value: float) -> str:
    ''' Format a float with 9 significant digits, compact and round-trippable to 9 digits '''
    if value == 0:
        return '0'
    return f'{value:.9g}'


def mhz_to_str(value: float) -> str:
    ''' Frequency in MHz, switching to GHz above 1000 MHz '''
    if abs(value) >= 1000:
        return f'{value / 1000:.4f} GHz'
    return f'{value:.3f} MHz'


def us_to_str(value: float) -> str:
    ''' Time in µs, switching to ns below 1 µs '''
    if abs(value) < 1:
        return f'{value * 1000:.1f} ns'
    return f'{value:.3f} us'


def parse_float_list(text: str) -> list:
    ''' "2, 4,6" -> [2.0, 4.0, 6.0]; empty text gives an empty list '''
    items = [t.strip() for t in text.split(',')]
    return [float(t) for t in items if t]


def grid(start: float, stop: float, step: float) -> list:
    ''' Inclusive arithmetic grid, robust to float round-off at the end point '''
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]

