''' Exceptions raised by the simulator, the fitter and the config parser '''
from typing import Optional


class NvSimError(Exception):
    ''' Base of every error this package raises on purpose '''


class ConfigError(NvSimError):
    ''' Invalid configuration text or override, anchored to a line when known

        line == 0 means the value came from a --set override.
    '''
    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None):
        self.line = line
        self.key = key
        where = ''
        if line is not None:
            where = 'line %d: ' % line if line > 0 else '--set: '
        if key:
            where += '%s: ' % key
        NvSimError.__init__(self, where + message)


class NumericalError(NvSimError):
    ''' A numerical step could not produce a trustworthy result '''


class AssemblyError(NumericalError):
    ''' Internal guard: an assembled operator broke its structural contract '''


class DegenerateSteadyStateError(NumericalError):
    ''' The Liouvillian null space has more than one dimension '''
    def __init__(self, dimension: int):
        self.dimension = dimension
        NumericalError.__init__(
            self,
            f'steady state is not unique: null space has dimension {dimension} '
            '(decoupled nuclear-spin sector or trapped level); evaluate per m_n sector, '
            'add a repump field, or use time-domain mode')


class IntegrationError(NumericalError):
    ''' The adaptive integrator failed to meet its tolerance '''
    def __init__(self, rtol: float, atol: float, reason: str):
        self.rtol = rtol
        self.atol = atol
        NumericalError.__init__(self, f'integrator failed at rtol={rtol:g}, atol={atol:g}: {reason}')


class FitError(NumericalError):
    ''' The least-squares problem cannot be solved '''
