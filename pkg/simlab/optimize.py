"""Nelder-Mead on a bounds box through a logit reparameterization, and the nested inf-sup driver."""

import logging
from dataclasses import dataclass, replace
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import optimize as spo
from scipy import special

from exceptions import FitStatus, InvalidParameterError, OptimizationError, SimlabError


_LOGGER = logging.getLogger('simlab')

# logit coordinates are clipped here so that from_unconstrained stays inside the box
_Z_LIMIT = 30.0
_MAX_NONFINITE_FRACTION = 0.5


@dataclass(frozen=True)
class OptimOptions:
    max_iters: int = 2000
    x_tol: float = 1e-6
    f_tol: float = 1e-8
    restarts: int = 2
    initial_simplex_scale: float = 0.1

    def __post_init__(self):
        if self.x_tol <= 0.0 or self.f_tol <= 0.0 or self.initial_simplex_scale <= 0.0:
            raise ValueError("optimizer tolerances and simplex scale must be positive")
        if self.max_iters < 1 or self.restarts < 0:
            raise ValueError("max_iters must be positive and restarts non-negative")

    @classmethod
    def from_options(cls, options=None) -> 'OptimOptions':
        return cls(**dict(options or {}))

    def inner(self) -> 'OptimOptions':
        """Options for the inner supremum: tighter f tolerance, one restart."""
        return replace(self, f_tol=self.f_tol / 10.0, restarts=min(self.restarts, 1))


DEFAULT_OPTIONS = OptimOptions()


class OptimResult(NamedTuple):
    x: np.ndarray
    fun: float
    status: FitStatus
    nfev: int
    nit: int
    restarts: int
    message: str = ''


class NestedResult(NamedTuple):
    phi: np.ndarray
    alpha: np.ndarray
    value: float
    status: FitStatus
    nfev: int
    inner_failures: int
    message: str = ''


def _box(bounds):
    lower, upper = (np.asarray(b, dtype=float) for b in bounds)
    if np.any(upper <= lower):
        raise InvalidParameterError(f"empty bounds box {lower}..{upper}")
    return lower, upper


def to_unconstrained(theta, bounds) -> np.ndarray:
    """logit((theta - lower)/(upper - lower)); the box midpoint maps to 0."""
    lower, upper = _box(bounds)
    th = np.asarray(theta, dtype=float)
    if np.any(th <= lower) or np.any(th >= upper):
        raise InvalidParameterError(f"{th} is not strictly inside the box {lower}..{upper}")
    return special.logit((th - lower) / (upper - lower))


def from_unconstrained(z, bounds) -> np.ndarray:
    lower, upper = _box(bounds)
    zz = np.clip(np.asarray(z, dtype=float), -_Z_LIMIT, _Z_LIMIT)
    return lower + (upper - lower) * special.expit(zz)


@dataclass
class _Tracker:
    """Counts evaluations, keeps the incumbent and the share of non-finite values."""
    f: Callable
    best_x: Optional[np.ndarray] = None
    best_f: float = np.inf
    calls: int = 0
    nonfinite: int = 0

    def __call__(self, x):
        self.calls += 1
        try:
            value = float(self.f(x))
        except SimlabError as exc:
            _LOGGER.debug(f"objective failed at {x}: {exc}")
            value = np.inf
        if not np.isfinite(value):
            self.nonfinite += 1
            return np.inf
        if value < self.best_f:
            self.best_f = value
            self.best_x = np.array(x, dtype=float)
        return value

    @property
    def mostly_nonfinite(self) -> bool:
        return self.calls > 0 and self.nonfinite / self.calls > _MAX_NONFINITE_FRACTION


def _initial_simplex(z0, lower, upper, scale, theta0):
    """Vertices moved by scale box-widths along each axis, mapped to logit space."""
    dim = len(z0)
    simplex = np.tile(z0, (dim + 1, 1))
    width = upper - lower
    for i in range(dim):
        step = scale * width[i]
        target = theta0[i] + step
        if target >= upper[i] - 1e-3 * width[i]:
            target = theta0[i] - step
        target = min(max(target, lower[i] + 1e-3 * width[i]), upper[i] - 1e-3 * width[i])
        simplex[i + 1, i] = special.logit((target - lower[i]) / width[i])
        if simplex[i + 1, i] == z0[i]:
            simplex[i + 1, i] += 0.5
    return simplex


def _free_simplex(x0, scale):
    dim = len(x0)
    simplex = np.tile(x0, (dim + 1, 1))
    for i in range(dim):
        simplex[i + 1, i] += scale * max(1.0, abs(x0[i]))
    return simplex


def nelder_mead(f: Callable, x0, bounds=None, opts: OptimOptions = DEFAULT_OPTIONS) -> OptimResult:
    """Minimize f from x0 inside the box, restarting from the incumbent with a re-inflated simplex."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if bounds is not None:
        lower, upper = _box(bounds)
        z0 = to_unconstrained(x0, bounds)

        def to_x(z):
            return from_unconstrained(z, bounds)

        def simplex_around(z, x):
            return _initial_simplex(z, lower, upper, opts.initial_simplex_scale, x)
    else:
        z0 = x0.copy()

        def to_x(z):
            return np.asarray(z, dtype=float)

        def simplex_around(z, x):
            return _free_simplex(z, opts.initial_simplex_scale)

    tracker = _Tracker(lambda z: f(to_x(z)))
    f0 = tracker(z0)
    if not np.isfinite(f0):
        raise OptimizationError(f"objective is not finite at the starting point {x0}")

    z_best, f_best = z0, f0
    status = FitStatus.CONVERGED
    nit = 0
    restarts = 0
    message = ''
    for attempt in range(opts.restarts + 1):
        result = spo.minimize(
            tracker, z_best, method='Nelder-Mead',
            options={'maxiter': opts.max_iters, 'maxfev': 2 * opts.max_iters, 'xatol': opts.x_tol,
                     'fatol': opts.f_tol, 'initial_simplex': simplex_around(z_best, to_x(z_best)),
                     'adaptive': len(z0) > 3})
        nit += int(result.nit)
        improved = tracker.best_f < f_best - opts.f_tol
        if tracker.best_x is not None and tracker.best_f <= f_best:
            z_best, f_best = tracker.best_x, tracker.best_f
        if tracker.mostly_nonfinite:
            status = FitStatus.ABORTED
            message = f"objective non-finite at {tracker.nonfinite} of {tracker.calls} evaluations"
            _LOGGER.warning(f"Nelder-Mead aborted: {message}")
            break
        status = FitStatus.CONVERGED if result.success else FitStatus.MAX_ITERS
        message = str(result.message)
        if attempt > 0:
            restarts += 1
            if not improved:
                break

    return OptimResult(to_x(z_best), float(f_best), status, tracker.calls, nit, restarts, message)


def nested_infsup(objective: Callable, phi0, alpha0, bounds_phi, bounds_alpha,
                  opts: OptimOptions = DEFAULT_OPTIONS) -> NestedResult:
    """inf over phi of sup over alpha of objective(phi, alpha).

    Each outer evaluation maximizes over alpha starting from the previous inner
    solution.  An evaluation whose inner problem fails scores +inf.  The witness
    alpha is the inner solution recorded at the best outer evaluation.
    """
    lower_a, upper_a = _box(bounds_alpha)
    centre = 0.5 * (lower_a + upper_a)
    alpha_start = np.clip(np.asarray(alpha0, dtype=float), lower_a + 1e-6 * (upper_a - lower_a),
                          upper_a - 1e-6 * (upper_a - lower_a))
    inner_opts = opts.inner()
    state = {'alpha': alpha_start, 'failures': 0, 'nfev': 0, 'best': np.inf, 'witness': alpha_start}

    def inner(phi):
        result = None
        for start in (state['alpha'], centre):
            try:
                result = nelder_mead(lambda a: -objective(phi, a), start, bounds_alpha, inner_opts)
            except OptimizationError:
                continue
            state['nfev'] += result.nfev
            if result.status is not FitStatus.ABORTED:
                return result
        state['failures'] += 1
        return None

    def outer(phi):
        result = inner(phi)
        if result is None:
            return np.inf
        value = -result.fun
        state['alpha'] = result.x
        if value < state['best']:
            state['best'] = value
            state['witness'] = result.x
        return value

    phi0 = np.atleast_1d(np.asarray(phi0, dtype=float))
    try:
        outer_result = nelder_mead(outer, phi0, bounds_phi, opts)
    except OptimizationError as exc:
        return NestedResult(phi0, alpha_start, np.inf, FitStatus.INNER_FAILURE, state['nfev'], state['failures'],
                            str(exc))

    status = outer_result.status
    message = outer_result.message
    if state['failures']:
        if status is FitStatus.CONVERGED:
            status = FitStatus.INNER_FAILURE
        message = f"{message}; inner supremum failed at {state['failures']} outer evaluations"
    return NestedResult(outer_result.x, state['witness'], outer_result.fun, status,
                        outer_result.nfev + state['nfev'], state['failures'], message)
