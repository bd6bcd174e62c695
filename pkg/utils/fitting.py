''' Multi-Lorentzian dip fitting by damped least squares

    model(x) = baseline + slope·(x − x_ref) − Σ depth_k·h_k² / ((x − center_k)² + h_k²),  h_k = fwhm_k/2

    Free widths and depths are iterated as fwhm = exp(u), depth = v², which keeps
    them positive without box constraints.
'''
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Dict, FrozenSet, List, Optional, Sequence

import numpy as np

from .errors import FitError
from .spectrum import Spectrum

logger = logging.getLogger(__name__)

LAMBDA_START = 1e-3
LAMBDA_CEILING = 1e16
RSS_TOLERANCE = 1e-10
GRADIENT_TOLERANCE = 1e-8
# fwhm is iterated as log(fwhm), clamped to this range
LOG_FWHM_MIN = math.log(1e-9)
LOG_FWHM_MAX = math.log(1e9)


@dataclass(frozen=True)
class LorentzianDip:
    center: float
    fwhm: float
    depth: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError('fwhm must be > 0')
        if self.depth < 0:
            raise ValueError('depth must be >= 0')


@dataclass(frozen=True)
class FitModel:
    baseline: float
    dips: tuple = ()
    slope: float = 0.0
    linear_baseline: bool = False
    x_ref: float = 0.0
    fixed: FrozenSet[str] = frozenset()

    def parameter_names(self) -> List[str]:
        names = ['baseline']
        if self.linear_baseline:
            names.append('slope')
        for k in range(len(self.dips)):
            names.extend((f'center{k}', f'fwhm{k}', f'depth{k}'))
        return names

    def free_names(self) -> List[str]:
        return [n for n in self.parameter_names() if n not in self.fixed]

    def value(self, name: str) -> float:
        if name in ('baseline', 'slope'):
            return getattr(self, name)
        kind, k = name.rstrip('0123456789'), int(name.lstrip('abcdefghijklmnopqrstuvwxyz'))
        return getattr(self.dips[k], kind)

    def updated(self, values: Dict[str, float]) -> 'FitModel':
        dips = [dict(center=d.center, fwhm=d.fwhm, depth=d.depth) for d in self.dips]
        top = {}
        for name, v in values.items():
            if name in ('baseline', 'slope'):
                top[name] = v
            else:
                kind, k = name.rstrip('0123456789'), int(name.lstrip('abcdefghijklmnopqrstuvwxyz'))
                dips[k][kind] = v
        return replace(self, dips=tuple(LorentzianDip(**d) for d in dips), **top)

    def fix(self, *names: str) -> 'FitModel':
        return replace(self, fixed=frozenset(self.fixed | set(names)))


@dataclass
class FitResult:
    model: FitModel
    rss: float
    stderr: Dict[str, float] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = False

    def sorted_dips(self) -> List[LorentzianDip]:
        return sorted(self.model.dips, key=lambda d: d.center)


def model_eval(model: FitModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.full_like(x, model.baseline)
    if model.linear_baseline:
        out += model.slope * (x - model.x_ref)
    for dip in model.dips:
        h2 = 0.25 * dip.fwhm * dip.fwhm
        out -= dip.depth * h2 / ((x - dip.center) ** 2 + h2)
    return out


def model_partials(model: FitModel, x: np.ndarray, names: Optional[Sequence[str]] = None) -> np.ndarray:
    ''' Analytic Jacobian, columns in the order of names (default: free parameters) '''
    x = np.asarray(x, dtype=float)
    names = model.free_names() if names is None else list(names)
    columns = []
    for name in names:
        if name == 'baseline':
            columns.append(np.ones_like(x))
            continue
        if name == 'slope':
            columns.append(x - model.x_ref)
            continue
        kind, k = name.rstrip('0123456789'), int(name.lstrip('abcdefghijklmnopqrstuvwxyz'))
        dip = model.dips[k]
        h = 0.5 * dip.fwhm
        dx = x - dip.center
        denom = dx * dx + h * h
        if kind == 'depth':
            columns.append(-h * h / denom)
        elif kind == 'center':
            columns.append(-dip.depth * h * h * 2 * dx / denom ** 2)
        else:
            columns.append(-dip.depth * h * dx * dx / denom ** 2)
    return np.column_stack(columns) if columns else np.zeros((len(x), 0))


def _kind(name: str) -> str:
    return name.rstrip('0123456789')


def _to_internal(name: str, value: float) -> float:
    kind = _kind(name)
    if kind == 'fwhm':
        return math.log(value)
    if kind == 'depth':
        return math.sqrt(max(value, 1e-12))
    return value


def _log_fwhm(u: float) -> float:
    return min(max(u, LOG_FWHM_MIN), LOG_FWHM_MAX)


def _from_internal(name: str, u: float) -> float:
    kind = _kind(name)
    if kind == 'fwhm':
        return math.exp(_log_fwhm(u))
    if kind == 'depth':
        return u * u
    return u


def _chain(name: str, u: float) -> float:
    kind = _kind(name)
    if kind == 'fwhm':
        return math.exp(_log_fwhm(u))
    if kind == 'depth':
        return 2 * u
    return 1.0


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500


def _apply(model: FitModel, names: Sequence[str], internal: np.ndarray) -> FitModel:
    return model.updated({n: _from_internal(n, u) for n, u in zip(names, internal)})


def fit(model0: FitModel, spectrum: Spectrum, options: FitOptions = FitOptions()) -> FitResult:
    ''' Damped Gauss–Newton with λ ×10 on rejected and ÷10 on accepted steps '''
    x, y = spectrum.x, spectrum.y
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise FitError('spectrum contains NaN or infinite values')
    names = model0.free_names()
    if not names:
        rss = float(np.sum((model_eval(model0, x) - y) ** 2))
        return FitResult(model0, rss, {}, 0, True)
    if len(names) >= len(x):
        raise FitError(f'{len(names)} free parameters for {len(x)} points')

    try:
        internal = np.array([_to_internal(n, model0.value(n)) for n in names])
        model = _apply(model0, names, internal)
    except ValueError as e:
        raise FitError(f'invalid start model: {e}') from e
    residual = model_eval(model, x) - y
    rss = float(residual @ residual)
    scale = float(y @ y) or 1.0
    lam = LAMBDA_START
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iterations + 1):
        chain = np.array([_chain(n, u) for n, u in zip(names, internal)])
        jac = model_partials(model, x, names) * chain
        gradient = jac.T @ residual
        if np.linalg.norm(gradient) < GRADIENT_TOLERANCE or rss < 1e-30 * scale:
            converged = True
            break
        normal = jac.T @ jac
        damping = np.maximum(np.diag(normal), 1e-12 * max(float(np.max(np.diag(normal))), 1e-300))
        accepted = False
        while lam <= LAMBDA_CEILING:
            try:
                step = np.linalg.solve(normal + lam * np.diag(damping), -gradient)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial_internal = internal + step
            try:
                trial = _apply(model0, names, trial_internal)
            except ValueError:
                # non-finite step
                lam *= 10
                continue
            trial_residual = model_eval(trial, x) - y
            trial_rss = float(trial_residual @ trial_residual)
            if np.isfinite(trial_rss) and trial_rss < rss:
                accepted = True
                break
            lam *= 10
        if not accepted:
            if not np.all(np.isfinite(normal)) or np.linalg.matrix_rank(normal) < len(names):
                raise FitError('normal equations singular after damping')
            # no downhill step is left at any damping: we sit in the minimum
            converged = True
            break
        improvement = (rss - trial_rss) / rss if rss > 0 else 0.0
        internal, model, residual, rss = trial_internal, trial, trial_residual, trial_rss
        lam = max(lam / 10, 1e-12)
        logger.debug('iteration %d: rss=%.6g lambda=%.1g', iterations, rss, lam)
        if improvement < RSS_TOLERANCE:
            converged = True
            break

    if converged and np.min(model_eval(model, x)) < 0:
        logger.warning('fitted model goes negative over the data range')
        converged = False
    if not converged:
        logger.warning('fit stopped after %d iterations without converging', iterations)
    return FitResult(model, rss, _standard_errors(model, x, rss), iterations, converged)


def _standard_errors(model: FitModel, x: np.ndarray, rss: float) -> Dict[str, float]:
    ''' Asymptotic errors from (JᵀJ)⁻¹ scaled by the reduced chi-square '''
    names = model.free_names()
    dof = len(x) - len(names)
    if not names or dof <= 0:
        return {}
    jac = model_partials(model, x, names)
    covariance = np.linalg.pinv(jac.T @ jac) * (rss / dof)
    return {n: float(math.sqrt(max(covariance[i, i], 0.0))) for i, n in enumerate(names)}


def fit_cpt(spectrum: Spectrum, centers: Sequence[float], init_weights: Optional[Sequence[float]] = None,
            linear_baseline: bool = False, options: FitOptions = FitOptions()) -> FitResult:
    ''' Fixed centers; baseline, depths and widths free; widths start at 1 MHz '''
    x, y = spectrum.x, spectrum.y
    baseline = float(np.percentile(y, 90)) if len(centers) else float(np.mean(y))
    contrast = max(baseline - float(np.min(y)), 1e-12 * max(baseline, 1.0))
    dips = []
    for k, center in enumerate(centers):
        if init_weights is not None:
            depth = max(init_weights[k], 0.01) * contrast
        else:
            depth = max(baseline - float(np.interp(center, x, y)), 0.05 * contrast)
        dips.append(LorentzianDip(float(center), 1.0, depth))
    model = FitModel(baseline, tuple(dips), 0.0, linear_baseline, float(np.mean(x)))
    model = model.fix(*(f'center{k}' for k in range(len(dips))))
    result = fit(model, spectrum, options)
    logger.info('fit_cpt: %d dips, rss=%.4g, converged=%s', len(dips), result.rss, result.converged)
    return result
