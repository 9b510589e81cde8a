"""Robustness diagnostics for the kernel-based estimator.

Influence function of the kernel MDphiDE under a Gaussian kernel of window w,
the escort condition of the two-component Gaussian mixture, the gap between
the classical and the kernel dual representations, the smoothed objective of
the Gaussian mean model, and the bounds entering the consistency conditions.

Only Cressie-Read divergences are handled here; gamma is passed directly.
"""

import logging
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from density_estimation import DensityEstimate, KdeSpec, KernelKind, log_smooth_model
from divergence_core import DivergenceSpec, phi_sharp_log, weighted_phi_prime
from estimators import dual_inner_objective, dual_integral_term, divergence_between, kernel_dual_objective
from exceptions import DivergenceDomainError, FitStatus, InvalidParameterError, SingularMatrixError
from models import ENVELOPE_WIDTH, FixedMixture, GaussMix2
from optimize import DEFAULT_OPTIONS, OptimOptions, nelder_mead
from quadrature import (
    DEFAULT_CONFIG, QuadratureConfig, integrate, integrate_half_line, integrate_half_line_vector, integrate_vector,
)


_LOGGER = logging.getLogger('simlab')

_SINGULAR_DET = 1e-10
_IF_POINTS = 201
_IF_REAL_LINE = (-50.0, 50.0)
_IF_HALF_LINE = (0.0, 100.0)

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _check_gamma(gamma):
    DivergenceSpec.cressie_read(gamma)
    return float(gamma)


def window_condition(gamma: float) -> float:
    """Smallest Gaussian window for which the smoothed Gaussian objective keeps its minimum, gamma in (0, 1)."""
    if not 0.0 < gamma < 1.0:
        raise DivergenceDomainError(f"the window condition is stated for gamma in (0, 1), got {gamma}")
    return float(np.sqrt((2.0 * gamma - 1.0 + np.sqrt(4.0 * gamma * gamma + 1.0)) / 2.0))


def escort_condition_gaussmix(escort, truth, gamma: float) -> bool:
    """True when the escort means sit on the robust side of the true means (strict inequalities).

    gamma > 0: mu1 > mu1_T and mu2 < mu2_T; gamma < 0: the reverse.
    """
    gamma = _check_gamma(gamma)
    model = GaussMix2()
    _, mu1, mu2 = model.validate(escort)
    _, mu1_t, mu2_t = model.validate(truth)
    if gamma > 0.0:
        return bool(mu1 > mu1_t and mu2 < mu2_t)
    return bool(mu1 < mu1_t and mu2 > mu2_t)


# Smoothed objective of the Gaussian mean model, truth N(0, 1)


def smoothed_objective(gamma: float, w: float, mu) -> np.ndarray:
    """Population kernel objective of N(mu, 1) against N(0, 1) smoothed by a Gaussian window w."""
    gamma = _check_gamma(gamma)
    if not w > 0.0:
        raise InvalidParameterError(f"window must be positive, got {w}")
    m2 = np.asarray(mu, dtype=float) ** 2
    w2 = w * w
    scale = (1.0 + w2) ** (gamma / 2.0)
    first = scale / np.sqrt(1.0 + gamma * w2) * np.exp(-gamma * (1.0 - gamma) * m2 / (2.0 * (1.0 + gamma * w2)))
    second = (scale * np.sqrt((1.0 + w2) / ((gamma + 1.0) * w2 + 1.0))
              * np.exp(-gamma * (w2 + 1.0 - gamma) * m2 / (2.0 * (1.0 + (gamma + 1.0) * w2))))
    return first / (gamma - 1.0) - second / gamma - 1.0 / (gamma * (gamma - 1.0))


def smoothed_objective_curve(gamma: float, w: float, grid) -> np.ndarray:
    """Rows (mu, objective) over the grid."""
    mu = np.asarray(grid, dtype=float)
    return np.column_stack([mu, smoothed_objective(gamma, w, mu)])


def smoothed_objective_quadrature(gamma: float, w: float, mu: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """The same objective with both integrals computed by quadrature."""
    gamma = _check_gamma(gamma)
    s2 = 1.0 + w * w

    def log_model(x):
        return -0.5 * (x - mu) ** 2 - _LOG_SQRT_2PI

    def log_smoothed(x):
        return -0.5 * x * x / s2 - 0.5 * np.log(2.0 * np.pi * s2)

    def log_truth(x):
        return -0.5 * x * x - _LOG_SQRT_2PI

    lo = min(mu, 0.0) - ENVELOPE_WIDTH * np.sqrt(s2)
    hi = max(mu, 0.0) + ENVELOPE_WIDTH * np.sqrt(s2)
    first = integrate(lambda x: np.exp(gamma * log_model(x) + (1.0 - gamma) * log_smoothed(x)), lo, hi, cfg).value
    second = integrate(lambda x: np.exp(gamma * (log_model(x) - log_smoothed(x)) + log_truth(x)), lo, hi, cfg).value
    return float((first - 1.0) / (gamma - 1.0) - (second - 1.0) / gamma)


# Dual gap


def _population_dual(model, phi, alpha, truth: FixedMixture, spec, cfg) -> float:
    """Dual objective with the sample mean replaced by the expectation under the truth."""
    phi = model.validate(phi)
    alpha = model.validate(alpha)
    if np.array_equal(phi, alpha):
        return 0.0
    integral = dual_integral_term(model, phi, alpha, spec, cfg)
    if not np.isfinite(integral):
        return np.inf

    def integrand(x):
        return np.exp(truth.log_pdf(x)) * phi_sharp_log(spec, model.log_pdf(phi, x) - model.log_pdf(alpha, x))

    return float(integral - integrate(integrand, *truth.envelope(), cfg).value)


def _kernel_population_dual(model, phi, truth: FixedMixture, w, spec, cfg) -> float:
    """Kernel dual objective with the smoothed truth in place of the kernel estimate."""
    phi = model.validate(phi)
    smoothed = truth.smoothed(w)
    lo, hi = model.envelope(phi)

    def first(x):
        return weighted_phi_prime(spec, model.log_pdf(phi, x), smoothed.log_pdf(x))

    def second(x):
        return np.exp(truth.log_pdf(x)) * phi_sharp_log(spec, model.log_pdf(phi, x) - smoothed.log_pdf(x))

    return float(integrate(first, lo, hi, cfg).value - integrate(second, *truth.envelope(), cfg).value)


def _sup_over_alpha(objective, start, model, opts) -> float:
    result = nelder_mead(lambda alpha: -objective(alpha), start, model.bounds, opts.inner())
    return -float(result.fun)


def dual_gap_curve(model, truth: FixedMixture, spec: DivergenceSpec, grid, window: Optional[float] = 0.5,
                   sample=None, kde_spec: Optional[KdeSpec] = None, cfg: QuadratureConfig = DEFAULT_CONFIG,
                   opts: OptimOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Rows (phi, classical dual sup, kernel dual, true divergence) over a grid of parameters.

    Without a sample both duals are population quantities and the kernel dual
    uses the truth smoothed by the window.  With a sample they are the
    empirical objectives and the kernel estimate follows kde_spec.
    """
    points = np.asarray(grid, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    kde = None
    if sample is not None:
        sample = np.asarray(sample, dtype=float)
        kde = DensityEstimate(kde_spec or KdeSpec(), sample, cfg)

    rows = []
    for phi in points:
        phi = model.clip_inside(phi)
        if kde is None:
            classical = _sup_over_alpha(lambda a: _population_dual(model, phi, a, truth, spec, cfg), phi, model, opts)
            kernel = _kernel_population_dual(model, phi, truth, window, spec, cfg)
        else:
            classical = _sup_over_alpha(lambda a: dual_inner_objective(model, phi, a, sample, spec, cfg), phi,
                                        model, opts)
            kernel = kernel_dual_objective(model, phi, kde, sample, spec, cfg)
        model_lo, model_hi = model.envelope(phi)
        truth_lo, truth_hi = truth.envelope()
        true_divergence = divergence_between(spec, lambda x: model.log_pdf(phi, x), truth.log_pdf,
                                             min(model_lo, truth_lo), max(model_hi, truth_hi), cfg)
        rows.append([*phi, classical, kernel, true_divergence])
        _LOGGER.debug(f"dual gap at {phi}: classical {classical:.6g}, kernel {kernel:.6g}, true {true_divergence:.6g}")
    return np.array(rows)


# Influence function


@dataclass
class IFReport:
    x0: np.ndarray
    values: np.ndarray
    sup_norm: float
    condition_number: float
    invertible: bool


class _InfluenceTerms:
    """Matrix A and the contamination terms at theta for a given truth and smoothed truth."""

    def __init__(self, model, theta, gamma, w, log_truth: Callable, log_smoothed: Callable, cfg):
        self.model = model
        self.theta = model.validate(theta)
        self.gamma = _check_gamma(gamma)
        if not w > 0.0:
            raise InvalidParameterError(f"window must be positive, got {w}")
        self.w = float(w)
        self.log_truth = log_truth
        self.log_smoothed = log_smoothed
        self.cfg = cfg
        self.matrix = self._matrix()
        self.determinant = float(np.linalg.det(self.matrix))
        self.condition_number = float(np.linalg.cond(self.matrix))

    def _score(self, x):
        """p, gradient of p divided by p and hessian of p divided by p at a scalar x."""
        p = float(self.model.pdf(self.theta, x))
        if p <= 0.0:
            d = self.model.dim
            return 0.0, np.zeros(d), np.zeros((d, d))
        return p, self.model.grad_pdf(self.theta, x) / p, self.model.hess_pdf(self.theta, x) / p

    def _integral(self, f, lo, hi):
        if np.isfinite(hi):
            return integrate_vector(f, lo, hi, self.cfg)
        below = integrate_vector(f, lo, 0.0, self.cfg) if lo < 0.0 else 0.0
        return below + integrate_half_line_vector(f, self.cfg)

    def _matrix(self):
        g = self.gamma
        d = self.model.dim

        def integrand(x):
            p, score, curvature = self._score(x)
            if p == 0.0:
                return np.zeros(d * d)
            log_s = self.log_smoothed(x)
            weight = np.exp(g * np.log(p) + (1.0 - g) * log_s)
            factor = g / (g - 1.0) - np.exp(self.log_truth(x) - log_s)
            return (factor * weight * ((g - 1.0) * np.outer(score, score) + curvature)).ravel()

        lo, hi = self.model.envelope(self.theta)
        lo, hi = lo - ENVELOPE_WIDTH * self.w, hi + ENVELOPE_WIDTH * self.w
        return np.asarray(self._integral(integrand, lo, hi), dtype=float).reshape(d, d)

    def contamination_term(self, x0) -> np.ndarray:
        """gamma times the kernel-weighted integral plus the point term at x0."""
        g = self.gamma
        w = self.w
        d = self.model.dim

        def integrand(x):
            p, score, _ = self._score(x)
            if p == 0.0:
                return np.zeros(d)
            log_s = self.log_smoothed(x)
            log_kernel = -0.5 * ((x - x0) / w) ** 2 - np.log(w) - _LOG_SQRT_2PI
            value = np.exp(g * (np.log(p) - log_s) + log_kernel) * -np.expm1(self.log_truth(x) - log_s)
            return value * score

        lo, hi = x0 - ENVELOPE_WIDTH * w, x0 + ENVELOPE_WIDTH * w
        if self.model.half_line:
            lo = max(lo, 0.0)
        integral = integrate_vector(integrand, lo, hi, self.cfg) if hi > lo else np.zeros(d)
        p, score, _ = self._score(x0)
        point = score * np.exp(g * (np.log(p) - self.log_smoothed(x0))) if p > 0.0 else np.zeros(d)
        return g * np.asarray(integral, dtype=float) + point

    def influence(self, x0) -> np.ndarray:
        if abs(self.determinant) < _SINGULAR_DET:
            raise SingularMatrixError(f"influence matrix is singular, det={self.determinant:.3g}")
        return np.linalg.solve(self.matrix, self.contamination_term(x0))


def _fisher_consistent_terms(model, theta_true, gamma, w, cfg) -> _InfluenceTerms:
    theta_true = model.validate(theta_true)
    return _InfluenceTerms(model, theta_true, gamma, w,
                           lambda x: model.log_pdf(theta_true, x),
                           lambda x: log_smooth_model(KernelKind.GAUSSIAN, w, model, theta_true, x, cfg), cfg)


def influence_kernel_mdphide(model, theta_true, gamma: float, w: float, x0,
                             cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Influence function at x0 when the truth belongs to the model, Gaussian kernel of window w."""
    return _fisher_consistent_terms(model, theta_true, gamma, w, cfg).influence(float(x0))


def influence_general(model, theta, gamma: float, w: float, log_truth: Callable, log_smoothed: Callable, x0,
                      cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Influence function at x0 for an arbitrary truth.

    theta must be the value of the estimating functional at the truth; log_truth
    and log_smoothed give the truth density and its Gaussian smoothing.
    """
    return _InfluenceTerms(model, theta, gamma, w, log_truth, log_smoothed, cfg).influence(float(x0))


def if_scan(model, theta_true, gamma: float, w: float, grid=None, cfg: QuadratureConfig = DEFAULT_CONFIG) -> IFReport:
    """Influence function over a grid of contamination points, A computed once."""
    if grid is None:
        grid = np.linspace(*(_IF_HALF_LINE if model.half_line else _IF_REAL_LINE), _IF_POINTS)
    x0 = np.asarray(grid, dtype=float)
    terms = _fisher_consistent_terms(model, theta_true, gamma, w, cfg)
    invertible = abs(terms.determinant) >= _SINGULAR_DET
    if not invertible:
        _LOGGER.warning(f"influence matrix singular (det={terms.determinant:.3g}) for gamma={gamma:g}, w={w:g}")
        values = np.full((x0.size, model.dim), np.nan)
        return IFReport(x0, values, np.nan, terms.condition_number, False)
    values = np.array([terms.influence(point) for point in x0])
    return IFReport(x0, values, float(np.max(np.abs(values))), terms.condition_number, True)


# Consistency bounds


class ConsistencyBounds(NamedTuple):
    a_n: float
    b_n: float
    status: FitStatus


def consistency_bounds(model, sample, kde: DensityEstimate, gamma: float, theta_true,
                       cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> ConsistencyBounds:
    """Suprema over the bounds box of the two quantities bounding the kernel objective, gamma in (-1, 0)."""
    if not -1.0 < gamma < 0.0:
        raise DivergenceDomainError(f"consistency bounds need gamma in (-1, 0), got {gamma}")
    theta_true = model.validate(theta_true)
    y = np.asarray(sample, dtype=float)
    half = (1.0 - gamma) / 2.0
    kde_lo, kde_hi = kde.envelope()
    truth_lo, truth_hi = model.envelope(theta_true)

    def a_term(phi):
        phi = model.validate(phi)
        model_lo, model_hi = model.envelope(phi)
        lo, hi = min(kde_lo, truth_lo, model_lo), max(kde_hi, truth_hi, model_hi)

        def integrand(x):
            log_p = model.log_pdf(phi, x)
            return (np.exp(half * kde.log_evaluate(x) + gamma * log_p)
                    + np.exp(half * model.log_pdf(theta_true, x) + gamma * log_p))

        if np.isfinite(hi):
            return integrate(integrand, lo, hi, cfg).value
        return integrate_half_line(integrand, cfg).value

    def b_term(phi):
        return float(np.mean(np.exp(gamma * model.log_pdf(phi, y))))

    start = model.clip_inside(theta_true)
    a_result = nelder_mead(lambda phi: -a_term(phi), start, model.bounds, opts)
    b_result = nelder_mead(lambda phi: -b_term(phi), start, model.bounds, opts)
    status = a_result.status if a_result.status is not FitStatus.CONVERGED else b_result.status
    return ConsistencyBounds(-float(a_result.fun), -float(b_result.fun), status)
