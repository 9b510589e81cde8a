"""Monte Carlo studies: seeded samples, contamination, every configured estimator, error criteria.

Each run owns a generator derived from (master seed, run index), so the rows
of a run do not depend on which worker computed it or in which order the
runs finished.  Rows are folded in run-index order.
"""

import asyncio
import csv
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from contamination import ContaminationKind, ContaminationScheme, apply_contamination
from delayedints import DelayedKeyboardInterrupt
from density_estimation import KdeSpec
from divergence_core import DivergenceSpec
from estimators import (
    DEFAULT_INIT_SHIFT, DEFAULT_LAMBDA_MAX, EstimatorResult, basu_lindsay, beran, classical_mdphide,
    contamination_mdphide, dphide, kernel_mdphide, mle, mpd, starting_point,
)
from exceptions import EstimatorError, FailedInitialization, FitStatus, SimlabError
from metrics import chi2_distance, tvd
from models import Model, make_model
from optimize import OptimOptions
from quadrature import QuadratureConfig
from readconfig import retrieve_options


_LOGGER = logging.getLogger('simlab')

RUNS_SCHEMA = 'simlab-runs schema 1'
SUMMARY_SCHEMA = 'simlab-summary schema 1'
RUNS_CSV = 'runs.csv'
SUMMARY_CSV = 'summary.csv'

_DEFAULT_SAMPLE_SIZE = 100
_DEFAULT_RUNS = 100
_DEFAULT_SEED = 1
_DEFAULT_DIVERGENCE = 'hellinger'
_DEFAULT_BANDWIDTH = 'silverman'

METHODS = ('mle', 'classical_mdphide', 'kernel_mdphide', 'dphide', 'beran', 'basu_lindsay', 'mpd',
           'contamination_mdphide')
_KERNEL_METHODS = ('kernel_mdphide', 'beran', 'basu_lindsay')
_DIVERGENCE_METHODS = ('classical_mdphide', 'kernel_mdphide', 'dphide', 'beran', 'basu_lindsay',
                       'contamination_mdphide')

_NUMBER = (int, float)
_QUADRATURE_OPTIONS = {
    'abs_tol': {'type': _NUMBER},
    'rel_tol': {'type': _NUMBER},
    'max_subdivisions': {'type': int},
    'fallback_gl_points': {'type': int},
}
_OPTIMIZER_OPTIONS = {
    'max_iters': {'type': int},
    'x_tol': {'type': _NUMBER},
    'f_tol': {'type': _NUMBER},
    'restarts': {'type': int},
    'initial_simplex_scale': {'type': _NUMBER},
}

# errors an estimator may raise on an unlucky sample; anything else is a bug and propagates
_RUN_ERRORS = (SimlabError, ValueError, ArithmeticError, np.linalg.LinAlgError)


@dataclass(frozen=True)
class EstimatorConfig:
    id: str
    method: str
    divergence: Optional[DivergenceSpec] = None
    kde: Optional[KdeSpec] = None
    a: Optional[float] = None
    escort: Union[None, str, Tuple[float, ...]] = None
    noise: Optional[str] = None
    lambda_max: float = DEFAULT_LAMBDA_MAX
    init: Optional[Tuple[float, ...]] = None
    ddof: int = 0

    @classmethod
    def from_options(cls, options: dict, model: Model) -> 'EstimatorConfig':
        id = options.get('id')
        method = options.get('method')
        if method not in METHODS:
            raise FailedInitialization(f"estimator '{id}': unknown method '{method}', expected one of {METHODS}")
        try:
            divergence = kde = None
            if method in _DIVERGENCE_METHODS:
                divergence = DivergenceSpec.parse(options.get('divergence', _DEFAULT_DIVERGENCE))
            if method in _KERNEL_METHODS:
                kernel = options.get('kernel', 'rig' if model.half_line else 'gaussian')
                kde = KdeSpec.parse(kernel, options.get('bandwidth', _DEFAULT_BANDWIDTH))
        except (SimlabError, ValueError) as e:
            raise FailedInitialization(f"estimator '{id}': {e}")

        a = options.get('a')
        if method == 'mpd' and a is None:
            raise FailedInitialization(f"estimator '{id}': mpd needs the trade-off 'a'")

        escort = options.get('escort')
        if method == 'dphide':
            if escort is None:
                raise FailedInitialization(f"estimator '{id}': dphide needs an escort (estimator id or parameters)")
            if not isinstance(escort, str):
                escort = tuple(float(v) for v in escort)

        ddof = options.get('ddof', 0)
        if ddof not in (0, 1) or (ddof and method != 'mle'):
            raise FailedInitialization(f"estimator '{id}': ddof is 0 or 1 and only applies to mle")

        init = options.get('init')
        return cls(id=id, method=method, divergence=divergence, kde=kde, a=None if a is None else float(a),
                   escort=escort, noise=options.get('noise'),
                   lambda_max=float(options.get('lambda_max', DEFAULT_LAMBDA_MAX)),
                   init=None if init is None else tuple(float(v) for v in init), ddof=ddof)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    model: Model
    truth: np.ndarray
    estimators: Tuple[EstimatorConfig, ...]
    sample_size: int = _DEFAULT_SAMPLE_SIZE
    runs: int = _DEFAULT_RUNS
    seed: int = _DEFAULT_SEED
    init: Optional[np.ndarray] = None
    contamination: ContaminationScheme = field(default_factory=ContaminationScheme)
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    optimizer: OptimOptions = field(default_factory=OptimOptions)
    init_shift: float = DEFAULT_INIT_SHIFT
    jobs: int = 1

    @classmethod
    def from_config(cls, config: dict, seed: Optional[int] = None, runs: Optional[int] = None,
                    jobs: Optional[int] = None, clean: bool = False) -> 'ExperimentConfig':
        """Build from a checked experiment file.

        seed, runs and jobs override the file; clean drops the contamination scheme.
        """
        simlab = config.get('simlab', {})
        experiment = simlab.get('experiment', {})
        settings = simlab.get('settings') or {}
        try:
            model = make_model(experiment.get('model'))
            truth = model.validate(experiment.get('truth'))
            init = experiment.get('init')
            init = None if init is None else model.validate(init)
            contamination = ContaminationScheme.from_config(None if clean else experiment.get('contamination'))
            quadrature = QuadratureConfig.from_options(retrieve_options(settings, 'quadrature', _QUADRATURE_OPTIONS))
            optimizer = OptimOptions.from_options(retrieve_options(settings, 'optimizer', _OPTIMIZER_OPTIONS))
        except (SimlabError, ValueError, TypeError) as e:
            raise FailedInitialization(f"experiment '{experiment.get('name')}': {e}")

        estimators = tuple(EstimatorConfig.from_options(entry.get('estimator', {}), model)
                           for entry in simlab.get('estimators') or [])
        return cls(
            name=experiment.get('name'),
            model=model,
            truth=truth,
            estimators=estimators,
            sample_size=int(experiment.get('sample_size', _DEFAULT_SAMPLE_SIZE)),
            runs=int(runs if runs is not None else experiment.get('runs', _DEFAULT_RUNS)),
            seed=int(seed if seed is not None else experiment.get('seed', _DEFAULT_SEED)),
            init=init,
            contamination=contamination,
            quadrature=quadrature,
            optimizer=optimizer,
            init_shift=float(settings.get('init_shift', DEFAULT_INIT_SHIFT)),
            jobs=int(jobs if jobs is not None else settings.get('jobs', 1)),
        )

    def __post_init__(self):
        if not self.estimators:
            raise FailedInitialization(f"experiment '{self.name}' has no estimators")
        if self.sample_size < 2 or self.runs < 1 or self.jobs < 1:
            raise FailedInitialization(
                f"experiment '{self.name}': sample_size >= 2, runs >= 1 and jobs >= 1 are required")
        if self.seed < 0:
            raise FailedInitialization(f"experiment '{self.name}': the seed must be non-negative")
        scheme = self.contamination
        if scheme.kind is not ContaminationKind.NONE and scheme.k + scheme.k_low >= self.sample_size:
            raise FailedInitialization(
                f"experiment '{self.name}': cannot contaminate {scheme.k + scheme.k_low} of {self.sample_size}")

        seen = set()
        for estimator in self.estimators:
            if estimator.id in seen:
                raise FailedInitialization(f"experiment '{self.name}': duplicate estimator id '{estimator.id}'")
            if isinstance(estimator.escort, str) and estimator.escort not in seen:
                raise FailedInitialization(
                    f"estimator '{estimator.id}': escort '{estimator.escort}' must name an earlier estimator")
            if isinstance(estimator.escort, tuple):
                try:
                    self.model.validate(estimator.escort)
                except SimlabError as e:
                    raise FailedInitialization(f"estimator '{estimator.id}': {e}")
            seen.add(estimator.id)


@dataclass
class RunRow:
    run_index: int
    estimator_id: str
    method: str
    status: str
    theta: Tuple[float, ...]
    chi2: float = np.nan
    tvd: float = np.nan
    nfev: int = 0
    message: str = ''

    @property
    def ok(self) -> bool:
        return self.status in _SUCCESS_STATUSES

    def as_dict(self, param_names) -> Dict[str, str]:
        row = {'run_index': str(self.run_index), 'estimator_id': self.estimator_id, 'method': self.method,
               'status': self.status}
        row.update({name: _fmt(value) for name, value in zip(param_names, self.theta)})
        row.update({'chi2': _fmt(self.chi2), 'tvd': _fmt(self.tvd), 'nfev': str(self.nfev),
                    'message': self.message})
        return row


_SUCCESS_STATUSES = tuple(s.name for s in (FitStatus.CONVERGED, FitStatus.MAX_ITERS, FitStatus.INNER_FAILURE,
                                           FitStatus.RESTARTED))


def _fmt(value) -> str:
    return '%.6g' % value


def _failed_row(run_index, estimator: EstimatorConfig, dim, message) -> RunRow:
    return RunRow(run_index, estimator.id, estimator.method, FitStatus.FAILED.name, (np.nan,) * dim,
                  message=message)


def run_seed_sequence(seed: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(run_index,))


def _estimate(config: ExperimentConfig, estimator: EstimatorConfig, y, phi0,
              done: Dict[str, EstimatorResult]) -> EstimatorResult:
    model, cfg, opts = config.model, config.quadrature, config.optimizer
    if estimator.init is not None:
        phi0 = model.validate(estimator.init)
    method = estimator.method
    if method == 'mle':
        init = estimator.init if estimator.init is not None else config.init
        return mle(model, y, init, opts, ddof=estimator.ddof)
    if method == 'classical_mdphide':
        return classical_mdphide(model, y, estimator.divergence, phi0, cfg=cfg, opts=opts)
    if method == 'kernel_mdphide':
        return kernel_mdphide(model, y, estimator.kde, estimator.divergence, phi0, cfg, opts)
    if method == 'beran':
        return beran(model, y, estimator.kde, estimator.divergence, phi0, cfg, opts)
    if method == 'basu_lindsay':
        return basu_lindsay(model, y, estimator.kde, estimator.divergence, phi0, cfg, opts)
    if method == 'mpd':
        return mpd(model, y, estimator.a, phi0, cfg, opts)
    if method == 'dphide':
        escort = estimator.escort
        if isinstance(escort, str):
            source = done.get(escort)
            if source is None or not source.ok:
                raise EstimatorError(f"escort estimator '{escort}' failed in this run")
            escort = source.theta_hat
        return dphide(model, escort, y, estimator.divergence, cfg=cfg, opts=opts)
    if method == 'contamination_mdphide':
        noise_model = make_model(estimator.noise) if estimator.noise else None
        return contamination_mdphide(model, y, estimator.divergence, noise_model, phi0,
                                     lambda_max=estimator.lambda_max, cfg=cfg, opts=opts)
    raise EstimatorError(f"unknown method '{method}'")


def run_one(config: ExperimentConfig, run_index: int) -> List[RunRow]:
    """One sample, its contamination and one row per estimator."""
    model, truth = config.model, config.truth
    rng = np.random.default_rng(run_seed_sequence(config.seed, run_index))
    clean = model.sample(truth, config.sample_size, rng)
    try:
        y = apply_contamination(clean, config.contamination, rng)
    except SimlabError as e:
        _LOGGER.error(f"run {run_index}: contamination failed: {e}")
        return [_failed_row(run_index, estimator, model.dim, str(e)) for estimator in config.estimators]

    phi0 = starting_point(model, y, config.init, shift=config.init_shift)
    rows = []
    done: Dict[str, EstimatorResult] = {}
    for estimator in config.estimators:
        try:
            result = _estimate(config, estimator, y, phi0, done)
            done[estimator.id] = result
            chi2 = chi2_distance(model, result.theta_hat, truth, config.quadrature)
            error = tvd(model, result.theta_hat, truth)
        except _RUN_ERRORS as e:
            _LOGGER.error(f"run {run_index}, estimator '{estimator.id}': {type(e).__name__}: {e}")
            rows.append(_failed_row(run_index, estimator, model.dim, f"{type(e).__name__}: {e}"))
            continue
        status, message = result.status.name, result.message
        if not result.ok:
            if status in _SUCCESS_STATUSES:
                status, message = FitStatus.ABORTED.name, f"objective is {result.objective_value}"
            _LOGGER.warning(f"run {run_index}, estimator '{estimator.id}' ended with {status}")
        rows.append(RunRow(run_index, estimator.id, estimator.method, status,
                           tuple(float(v) for v in result.theta_hat), chi2, error, result.nfev, message))
    return rows


class Statistics(NamedTuple):
    mean: float
    median: float
    sd: float

    @classmethod
    def of(cls, values) -> 'Statistics':
        values = np.asarray(values, dtype=float)
        if values.size == 0:
            return cls(np.nan, np.nan, np.nan)
        sd = float(np.std(values, ddof=1)) if values.size > 1 else np.nan
        return cls(float(np.mean(values)), float(np.median(values)), sd)


@dataclass
class EstimatorSummary:
    estimator_id: str
    method: str
    runs_ok: int
    runs_failed: int
    chi2_infinite: int
    params: Tuple[Statistics, ...]
    chi2: Statistics
    tvd: Statistics

    def as_dict(self, param_names) -> Dict[str, str]:
        row = {'estimator_id': self.estimator_id, 'method': self.method, 'runs_ok': str(self.runs_ok),
               'runs_failed': str(self.runs_failed), 'chi2_infinite': str(self.chi2_infinite)}
        for name, stats in zip(param_names, self.params):
            row[f"{name}_mean"] = _fmt(stats.mean)
            row[f"{name}_sd"] = _fmt(stats.sd)
        for name, stats in (('chi2', self.chi2), ('tvd', self.tvd)):
            row.update({f"{name}_mean": _fmt(stats.mean), f"{name}_median": _fmt(stats.median),
                        f"{name}_sd": _fmt(stats.sd)})
        return row


@dataclass
class RunSummary:
    experiment: str
    param_names: Tuple[str, ...]
    estimators: List[EstimatorSummary]

    def get(self, estimator_id) -> EstimatorSummary:
        for summary in self.estimators:
            if summary.estimator_id == estimator_id:
                return summary
        raise KeyError(estimator_id)

    @property
    def failures(self) -> int:
        return sum(s.runs_failed for s in self.estimators)


def summarize(config: ExperimentConfig, rows: List[RunRow]) -> RunSummary:
    """Per-estimator aggregates over the successful runs; failures and infinite chi2 are counted apart."""
    summaries = []
    for estimator in config.estimators:
        mine = [r for r in rows if r.estimator_id == estimator.id]
        ok = [r for r in mine if r.ok]
        theta = np.array([r.theta for r in ok], dtype=float).reshape(len(ok), config.model.dim)
        chi2 = np.array([r.chi2 for r in ok], dtype=float)
        summaries.append(EstimatorSummary(
            estimator.id, estimator.method, len(ok), len(mine) - len(ok), int(np.sum(~np.isfinite(chi2))),
            tuple(Statistics.of(theta[:, j]) for j in range(config.model.dim)),
            Statistics.of(chi2[np.isfinite(chi2)]),
            Statistics.of([r.tvd for r in ok]),
        ))
    return RunSummary(config.name, config.model.param_names, summaries)


def write_csv(path, schema, comment, fieldnames, rows):
    """A '# schema comment' line, the header and the rows; interrupts wait until the file is closed."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    with DelayedKeyboardInterrupt():
        with open(path, 'w', encoding='utf-8', newline='') as handle:
            handle.write(f"# {schema} {comment}\n")
            writer = csv.DictWriter(handle, fieldnames=fieldnames, lineterminator='\n')
            writer.writeheader()
            for row in rows:
                writer.writerow(row)


def write_results(config: ExperimentConfig, rows: List[RunRow], summary: RunSummary, out_dir) -> Tuple[str, str]:
    """runs.csv and summary.csv under out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    names = config.model.param_names
    comment = f"experiment={config.name} model={config.model.name} seed={config.seed} runs={config.runs} " \
              f"n={config.sample_size} contamination={config.contamination.label}"

    runs_path = os.path.join(out_dir, RUNS_CSV)
    fields = ['run_index', 'estimator_id', 'method', 'status', *names, 'chi2', 'tvd', 'nfev', 'message']
    write_csv(runs_path, RUNS_SCHEMA, comment, fields, [r.as_dict(names) for r in rows])

    summary_path = os.path.join(out_dir, SUMMARY_CSV)
    fields = ['estimator_id', 'method', 'runs_ok', 'runs_failed', 'chi2_infinite']
    for name in names:
        fields += [f"{name}_mean", f"{name}_sd"]
    for name in ('chi2', 'tvd'):
        fields += [f"{name}_mean", f"{name}_median", f"{name}_sd"]
    write_csv(summary_path, SUMMARY_SCHEMA, comment, fields, [s.as_dict(names) for s in summary.estimators])
    _LOGGER.info(f"Wrote {runs_path} and {summary_path}")
    return runs_path, summary_path


class Experiment:
    """Runs a study on the event loop; with more than one job the runs go to a process pool."""

    def __init__(self, config: ExperimentConfig):
        self._config = config
        self._executor = None

    async def start(self) -> bool:
        config = self._config
        _LOGGER.info(f"Experiment '{config.name}': model {config.model.name}, truth {config.truth}, "
                     f"n={config.sample_size}, {config.runs} runs, seed {config.seed}, "
                     f"contamination {config.contamination.label}, {len(config.estimators)} estimators")
        if config.jobs > 1:
            self._executor = ProcessPoolExecutor(max_workers=config.jobs)
        return True

    async def _run_index(self, run_index) -> List[RunRow]:
        if self._executor is None:
            rows = run_one(self._config, run_index)
        else:
            loop = asyncio.get_running_loop()
            rows = await loop.run_in_executor(self._executor, run_one, self._config, run_index)
        _LOGGER.info(f"Run {run_index + 1}/{self._config.runs} finished, "
                     f"{sum(not r.ok for r in rows)} estimator failures")
        return rows

    async def run(self) -> List[RunRow]:
        per_run = await asyncio.gather(*(self._run_index(i) for i in range(self._config.runs)))
        return [row for rows in per_run for row in rows]

    async def stop(self):
        if self._executor:
            self._executor.shutdown(wait=True, cancel_futures=True)
            self._executor = None


def run_experiment(config: ExperimentConfig, out_dir=None) -> Tuple[RunSummary, List[RunRow]]:
    """Run the study to completion; CSV files are written when out_dir is given."""
    async def study():
        experiment = Experiment(config)
        await experiment.start()
        try:
            return await experiment.run()
        finally:
            await experiment.stop()

    rows = asyncio.run(study())
    summary = summarize(config, rows)
    if out_dir is not None:
        write_results(config, rows, summary, out_dir)
    return summary, rows
