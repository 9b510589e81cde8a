"""Figure data: the dual gap, the smoothed objective curves and the influence function scan.

Every file starts with a comment line naming the schema and the parameters,
followed by a CSV header.
"""

import logging
from typing import Optional

import numpy as np

from density_estimation import KdeSpec
from divergence_core import DivergenceSpec
from exceptions import InvalidParameterError
from experiment import write_csv
from models import FixedMixture, GaussianMean
from optimize import DEFAULT_OPTIONS, OptimOptions
from quadrature import DEFAULT_CONFIG, QuadratureConfig
from robustness import dual_gap_curve, if_scan, smoothed_objective_curve


_LOGGER = logging.getLogger('simlab')

FIGURE_SCHEMA = 'simlab-figure schema 1'
FIGURE_KINDS = ('dual_gap', 'objective_curves', 'if_scan')

# 0.9 N(0, 1) + 0.1 N(10, 2), sd parameterization
DUAL_GAP_TRUTH = FixedMixture([0.9, 0.1], [0.0, 10.0], [1.0, 2.0])

_DEFAULT_GAMMA = {'dual_gap': (0.5,), 'objective_curves': (0.1, 0.5, 0.9), 'if_scan': (0.5,)}
_DEFAULT_WINDOW = {'dual_gap': (0.5,), 'objective_curves': (0.25, 0.5, 1.0), 'if_scan': (0.5,)}
_DEFAULT_GRID = {'dual_gap': (-2.0, 3.0, 51), 'objective_curves': (-3.0, 3.0, 121), 'if_scan': (-50.0, 50.0, 201)}


def parse_grid(value):
    """'lo,hi,points' or a (lo, hi, points) triple into an evenly spaced grid."""
    if isinstance(value, str):
        value = [v for v in value.split(',') if v.strip()]
    try:
        lo, hi, points = value
        lo, hi, points = float(lo), float(hi), int(points)
    except (TypeError, ValueError):
        raise InvalidParameterError(f"grid must be 'lo,hi,points', got {value!r}") from None
    if not hi > lo or points < 2:
        raise InvalidParameterError(f"grid needs hi > lo and at least two points, got {value!r}")
    return np.linspace(lo, hi, points)


def _floats(value, default):
    if value is None:
        return tuple(default)
    if isinstance(value, str):
        return tuple(float(v) for v in value.split(',') if v.strip())
    return tuple(float(v) for v in np.atleast_1d(value))


def _dual_gap(params, cfg, opts):
    gamma = _floats(params.get('gamma'), _DEFAULT_GAMMA['dual_gap'])[0]
    window = _floats(params.get('window'), _DEFAULT_WINDOW['dual_gap'])[0]
    grid = parse_grid(params.get('grid') or _DEFAULT_GRID['dual_gap'])
    model = GaussianMean()
    spec = DivergenceSpec.cressie_read(gamma)

    sample, kde_spec = None, None
    sample_size = params.get('sample_size')
    if sample_size:
        rng = np.random.default_rng(int(params.get('seed', 1)))
        sample = DUAL_GAP_TRUTH.sample(int(sample_size), rng)
        kde_spec = KdeSpec.parse('gaussian', params.get('bandwidth', 'silverman'))
    rows = dual_gap_curve(model, DUAL_GAP_TRUTH, spec, grid, window, sample, kde_spec, cfg, opts)

    mode = f"empirical n={int(sample_size)}" if sample is not None else f"population window={window:g}"
    comment = f"kind=dual_gap truth={DUAL_GAP_TRUTH!r} gamma={gamma:g} {mode}"
    fields = ['mu', 'classical_dual', 'kernel_dual', 'true_divergence']
    return comment, fields, [dict(zip(fields, row)) for row in rows]


def _objective_curves(params, cfg, opts):
    gammas = _floats(params.get('gamma'), _DEFAULT_GAMMA['objective_curves'])
    windows = _floats(params.get('window'), _DEFAULT_WINDOW['objective_curves'])
    grid = parse_grid(params.get('grid') or _DEFAULT_GRID['objective_curves'])
    fields = ['gamma', 'window', 'mu', 'objective']
    rows = []
    for gamma in gammas:
        for window in windows:
            for mu, value in smoothed_objective_curve(gamma, window, grid):
                rows.append(dict(zip(fields, (gamma, window, mu, value))))
    comment = "kind=objective_curves truth=N(0,1) model=N(mu,1) kernel=gaussian"
    return comment, fields, rows


def _if_scan(params, cfg, opts):
    gamma = _floats(params.get('gamma'), _DEFAULT_GAMMA['if_scan'])[0]
    window = _floats(params.get('window'), _DEFAULT_WINDOW['if_scan'])[0]
    grid = parse_grid(params.get('grid') or _DEFAULT_GRID['if_scan'])
    model = GaussianMean()
    report = if_scan(model, [0.0], gamma, window, grid, cfg)
    fields = ['x0', *(f"if_{name}" for name in model.param_names), 'if_norm']
    rows = []
    for x0, value in zip(report.x0, report.values):
        rows.append(dict(zip(fields, (x0, *value, np.linalg.norm(value)))))
    comment = f"kind=if_scan model=N(mu,1) truth=0 gamma={gamma:g} window={window:g} " \
              f"sup_norm={report.sup_norm:.6g} condition={report.condition_number:.6g} " \
              f"invertible={report.invertible}"
    return comment, fields, rows


_EMITTERS = {
    'dual_gap': _dual_gap,
    'objective_curves': _objective_curves,
    'if_scan': _if_scan,
}


def emit_figure_data(kind: str, params: Optional[dict], out: str, cfg: QuadratureConfig = DEFAULT_CONFIG,
                     opts: OptimOptions = DEFAULT_OPTIONS) -> str:
    """Compute the data behind one figure and write it to out as CSV."""
    try:
        emitter = _EMITTERS[kind]
    except KeyError:
        raise InvalidParameterError(f"unknown figure kind '{kind}', expected one of {FIGURE_KINDS}") from None
    comment, fields, rows = emitter(dict(params or {}), cfg, opts)
    formatted = [{key: '%.6g' % value for key, value in row.items()} for row in rows]
    write_csv(out, FIGURE_SCHEMA, comment, fields, formatted)
    _LOGGER.info(f"Wrote {len(rows)} rows of {kind} data to {out}")
    return out
