"""Estimation procedures: pure functions from (model, sample, options) to EstimatorResult.

    mle                     maximum likelihood (closed form, EM or Nelder-Mead)
    classical_mdphide       inf over phi of the sup over alpha of the dual objective
    kernel_mdphide          the dual variable replaced by a kernel estimate, single minimization
    dphide                  sup over alpha at a fixed escort parameter
    contamination_mdphide   classical dual with a (1 - lam) p_alpha + lam q_theta denominator
    beran                   D(p_phi, K) with the data smoothed
    basu_lindsay            D(p*_phi, K) with both the data and the model smoothed
    mpd                     minimum density power divergence

Density ratios are always exp(log p - log q).
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import optimize as spo
from scipy import stats

from density_estimation import DensityEstimate, KdeSpec, KernelKind, log_smooth_model
from divergence_core import (
    DivergenceKind, DivergenceSpec, cross_constant, cross_power, phi_prime_log, phi_sharp_log, weighted_phi_prime,
)
from exceptions import EstimatorError, FitStatus, InvalidParameterError, UnsupportedKernelError
from models import ENVELOPE_WIDTH, GPD, GaussMix2, Gaussian, GaussianMean, WeibullMix2
from optimize import DEFAULT_OPTIONS, OptimOptions, nelder_mead, nested_infsup
from quadrature import DEFAULT_CONFIG, QuadratureConfig, expectation, integrate, integrate_half_line


_LOGGER = logging.getLogger('simlab')

_OK_STATUSES = (FitStatus.CONVERGED, FitStatus.MAX_ITERS, FitStatus.INNER_FAILURE, FitStatus.RESTARTED)

# starting points are moved this many box widths away from the data-driven guess
DEFAULT_INIT_SHIFT = 0.0025

MPD_TRADEOFFS = (0.1, 0.25, 0.5, 0.75, 1.0)
DEFAULT_LAMBDA_MAX = 0.5

_EM_MAX_ITERS = 1000
_EM_MAX_RESTARTS = 5


@dataclass
class EstimatorResult:
    method: str
    theta_hat: np.ndarray
    objective_value: float
    status: FitStatus
    nfev: int = 0
    witnesses: Dict[str, Any] = field(default_factory=dict)
    message: str = ''

    @property
    def ok(self) -> bool:
        return self.status in _OK_STATUSES and bool(np.isfinite(self.objective_value))


def starting_point(model, sample, phi0=None, shift: float = DEFAULT_INIT_SHIFT) -> np.ndarray:
    """phi0 when given, otherwise the family's guess from the data moved by shift box-widths."""
    if phi0 is not None:
        return model.validate(model.clip_inside(phi0))
    guess = model.initial_guess(sample)
    return model.clip_inside(guess + shift * (model.upper - model.lower))


def _result_from(method, model, opt, witnesses=None) -> EstimatorResult:
    return EstimatorResult(method, model.clip_inside(opt.x), float(opt.fun), opt.status, opt.nfev,
                           dict(witnesses or {}), opt.message)


def _sample(sample) -> np.ndarray:
    y = np.asarray(sample, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise EstimatorError(f"estimators need a one dimensional sample of at least two points, got shape {y.shape}")
    return y


def _integral_range(f, lo, hi, cfg):
    """Integral of f over [lo, hi]; hi may be inf when the range reaches past 0."""
    if np.isfinite(hi):
        return integrate(f, lo, hi, cfg).value
    below = integrate(f, lo, 0.0, cfg).value if lo < 0.0 else 0.0
    return below + integrate_half_line(f, cfg).value


# Dual objectives


def _dual_integral(model, phi, log_den, spec, cfg, den_range=None) -> float:
    """Integral of p_phi phi'(p_phi/den) for the denominator given by its log.

    den_range widens the real-line range to the mass of the denominator; only used where
    the integrand vanishes with p_phi (modified KL and gamma > 0).
    """
    if model.half_line and model.has_analytic_quantile:
        return expectation(lambda x: phi_prime_log(spec, model.log_pdf(phi, x) - log_den(x)), model, phi, cfg)
    lo, hi = model.envelope(phi)
    if den_range is not None and (spec.kind is DivergenceKind.MODIFIED_KL or spec.gamma > 0.0):
        lo, hi = min(lo, den_range[0]), max(hi, den_range[1])
    return _integral_range(lambda x: weighted_phi_prime(spec, model.log_pdf(phi, x), log_den(x)), lo, hi, cfg)


def dual_integral_term(model, phi, alpha, spec: DivergenceSpec, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of p_phi phi'(p_phi/p_alpha), in closed form when the family has one (inf when divergent)."""
    if spec.kind is DivergenceKind.MODIFIED_KL:
        # integral of p_phi - p_alpha
        return 0.0
    cross = model.cross_power_integral(phi, alpha, spec.gamma)
    if cross is None:
        return _dual_integral(model, phi, lambda x: model.log_pdf(alpha, x), spec, cfg)
    return (cross - 1.0) / (spec.gamma - 1.0) if np.isfinite(cross) else np.inf


def dual_inner_objective(model, phi, alpha, sample, spec: DivergenceSpec,
                         cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of phi'(p_phi/p_alpha) p_phi minus the sample mean of phi#(p_phi/p_alpha)."""
    phi = model.validate(phi)
    alpha = model.validate(alpha)
    if np.array_equal(phi, alpha):
        return 0.0
    integral = dual_integral_term(model, phi, alpha, spec, cfg)
    if not np.isfinite(integral):
        return np.inf
    y = np.asarray(sample, dtype=float)
    log_ratio = model.log_pdf(phi, y) - model.log_pdf(alpha, y)
    return float(integral - np.mean(phi_sharp_log(spec, log_ratio)))


def kernel_dual_objective(model, phi, kde: DensityEstimate, sample, spec: DivergenceSpec,
                          cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """The dual objective with the kernel estimate K in place of p_alpha."""
    phi = model.validate(phi)
    y = np.asarray(sample, dtype=float)
    log_k = kde.log_evaluate(y)
    if not np.all(np.isfinite(log_k)):
        raise EstimatorError("kernel estimate vanishes at an observation")
    integral = _dual_integral(model, phi, kde.log_evaluate, spec, cfg, den_range=kde.envelope())
    return float(integral - np.mean(phi_sharp_log(spec, model.log_pdf(phi, y) - log_k)))


def divergence_between(spec: DivergenceSpec, log_p, log_q, lo, hi, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """D(p, q), the integral of q phi(p/q), for two densities given by their logs."""
    def integrand(x):
        return cross_power(spec, log_p(x), log_q(x))

    return _integral_range(integrand, lo, hi, cfg) + cross_constant(spec)


# Estimators


def classical_mdphide(model, sample, spec: DivergenceSpec, phi0=None, alpha0=None,
                      cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    y = _sample(sample)
    start = starting_point(model, y, phi0)
    alpha_start = start if alpha0 is None else model.clip_inside(alpha0)

    def objective(phi, alpha):
        return dual_inner_objective(model, phi, alpha, y, spec, cfg)

    nested = nested_infsup(objective, start, alpha_start, model.bounds, model.bounds, opts)
    return EstimatorResult('classical_mdphide', model.clip_inside(nested.phi), float(nested.value), nested.status,
                           nested.nfev, {'alpha': nested.alpha, 'inner_failures': nested.inner_failures},
                           nested.message)


def kernel_mdphide(model, sample, kde_spec: KdeSpec, spec: DivergenceSpec, phi0=None,
                   cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    y = _sample(sample)
    kde = DensityEstimate(kde_spec, y, cfg)
    start = starting_point(model, y, phi0)
    opt = nelder_mead(lambda phi: kernel_dual_objective(model, phi, kde, y, spec, cfg), start, model.bounds, opts)
    return _result_from('kernel_mdphide', model, opt,
                        {'bandwidth': kde.bandwidth, 'bandwidth_fallback': kde.fallback})


def dphide(model, escort, sample, spec: DivergenceSpec, alpha0=None,
           cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    """Maximizer over alpha of the dual objective at the fixed escort parameter."""
    y = _sample(sample)
    escort = model.validate(model.clip_inside(escort))
    start = escort if alpha0 is None else model.clip_inside(alpha0)
    opt = nelder_mead(lambda alpha: -dual_inner_objective(model, escort, alpha, y, spec, cfg), start,
                      model.bounds, opts)
    return EstimatorResult('dphide', model.clip_inside(opt.x), -float(opt.fun), opt.status, opt.nfev,
                           {'escort': escort}, opt.message)


def beran(model, sample, kde_spec: KdeSpec, spec: DivergenceSpec, phi0=None,
          cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    """Minimizer of D(p_phi, K), the data smoothed and the model left alone."""
    y = _sample(sample)
    kde = DensityEstimate(kde_spec, y, cfg)
    start = starting_point(model, y, phi0)

    def objective(phi):
        phi = model.validate(phi)
        if spec.kind is DivergenceKind.MODIFIED_KL:
            lo, hi = kde.envelope()
            return divergence_between(spec, lambda x: model.log_pdf(phi, x), kde.log_evaluate, lo, hi, cfg)
        g = spec.gamma
        # integral of p**g K**(1-g) over the support of p_phi
        if model.half_line and model.has_analytic_quantile:
            cross = expectation(lambda x: np.exp((1.0 - g) * (kde.log_evaluate(x) - model.log_pdf(phi, x))),
                                model, phi, cfg)
        else:
            lo, hi = model.envelope(phi)
            cross = _integral_range(lambda x: np.exp(g * model.log_pdf(phi, x) + (1.0 - g) * kde.log_evaluate(x)),
                                    lo, hi, cfg)
        return cross / (g * (g - 1.0)) + cross_constant(spec)

    opt = nelder_mead(objective, start, model.bounds, opts)
    return _result_from('beran', model, opt, {'bandwidth': kde.bandwidth, 'bandwidth_fallback': kde.fallback})


def basu_lindsay(model, sample, kde_spec: KdeSpec, spec: DivergenceSpec, phi0=None,
                 cfg: QuadratureConfig = DEFAULT_CONFIG, opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    """Minimizer of D(p*_phi, K) where p*_phi is the model smoothed by the same kernel."""
    if kde_spec.kernel not in (KernelKind.GAUSSIAN, KernelKind.VARYING):
        raise UnsupportedKernelError(f"Basu-Lindsay needs the gaussian or mt kernel, not {kde_spec.kernel.value}")
    y = _sample(sample)
    kde = DensityEstimate(kde_spec, y, cfg)
    w = kde.bandwidth
    start = starting_point(model, y, phi0)
    kde_lo, kde_hi = kde.envelope()

    def objective(phi):
        phi = model.validate(phi)
        if kde.half_line:
            lo, hi = 0.0, np.inf
        else:
            model_lo, model_hi = model.envelope(phi)
            lo = min(kde_lo, model_lo - ENVELOPE_WIDTH * w)
            hi = max(kde_hi, model_hi + ENVELOPE_WIDTH * w)

        def log_smoothed(x):
            return log_smooth_model(kde.kernel, w, model, phi, x, cfg)

        return divergence_between(spec, log_smoothed, kde.log_evaluate, lo, hi, cfg)

    opt = nelder_mead(objective, start, model.bounds, opts)
    return _result_from('basu_lindsay', model, opt, {'bandwidth': w, 'bandwidth_fallback': kde.fallback})


def mpd_objective(model, phi, sample, a: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of p_phi**(1+a) minus ((a+1)/a) times the sample mean of p_phi**a."""
    phi = model.validate(phi)
    power = model.power_integral(phi, a)
    if power is None:
        power = expectation(lambda x: np.exp(a * model.log_pdf(phi, x)), model, phi, cfg)
    return float(power - (a + 1.0) / a * np.mean(np.exp(a * model.log_pdf(phi, np.asarray(sample, dtype=float)))))


def mpd(model, sample, a: float, phi0=None, cfg: QuadratureConfig = DEFAULT_CONFIG,
        opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    if not 0.0 < a <= 1.0:
        raise InvalidParameterError(f"power divergence trade-off must lie in (0, 1], got {a}")
    y = _sample(sample)
    start = starting_point(model, y, phi0)
    opt = nelder_mead(lambda phi: mpd_objective(model, phi, y, a, cfg), start, model.bounds, opts)
    return _result_from('mpd', model, opt, {'a': a})


# Maximum likelihood


def _negative_loglik(model, theta, y) -> float:
    return -float(np.mean(model.log_pdf(theta, y)))


def _closed_form(model, theta, y, method='mle') -> EstimatorResult:
    inside = model.clip_inside(theta)
    message = '' if np.allclose(inside, theta) else f"estimate {theta} moved inside the bounds box"
    return EstimatorResult(method, inside, _negative_loglik(model, inside, y), FitStatus.CONVERGED, 0, {}, message)


def em_gauss_mixture(sample, init=None, tol: float = 1e-8, max_iters: int = _EM_MAX_ITERS,
                     rng: Optional[np.random.Generator] = None) -> EstimatorResult:
    """EM for lam N(mu1, 1) + (1 - lam) N(mu2, 1); components ordered so that mu1 < mu2."""
    model = GaussMix2()
    y = _sample(sample)
    n = y.size
    rng = rng if rng is not None else np.random.default_rng(0)
    lam, mu1, mu2 = model.initial_guess(y) if init is None else np.asarray(init, dtype=float)
    origin = np.array([lam, mu1, mu2])

    trace = []
    restarts = 0
    status = FitStatus.MAX_ITERS
    iterations = 0
    while True:
        collapsed = False
        for iterations in range(1, max_iters + 1):
            l1 = np.log(lam) + stats.norm.logpdf(y, mu1)
            l2 = np.log1p(-lam) + stats.norm.logpdf(y, mu2)
            total = np.logaddexp(l1, l2)
            trace.append(float(np.sum(total)))
            if len(trace) > 1 and trace[-1] - trace[-2] < tol:
                status = FitStatus.CONVERGED
                break
            r = np.exp(l1 - total)
            weight = r.sum()
            if weight < 1.0 or weight > n - 1.0:
                collapsed = True
                break
            lam = weight / n
            mu1 = float(np.dot(r, y) / weight)
            mu2 = float(np.dot(1.0 - r, y) / (n - weight))
        if not collapsed:
            break
        if restarts == _EM_MAX_RESTARTS:
            raise EstimatorError(f"EM responsibilities collapsed {restarts + 1} times")
        restarts += 1
        _LOGGER.debug(f"EM collapse, restart {restarts} from a jittered start")
        lam = float(np.clip(origin[0] + rng.uniform(-0.1, 0.1), 0.1, 0.9))
        mu1, mu2 = origin[1:] + rng.normal(scale=0.5, size=2)
        trace = []

    if mu1 > mu2:
        lam, mu1, mu2 = 1.0 - lam, mu2, mu1
    theta = np.array([lam, mu1, mu2])
    result = _closed_form(model, theta, y)
    result.status = FitStatus.RESTARTED if restarts else status
    result.nfev = iterations
    result.witnesses = {'loglik_trace': np.array(trace), 'restarts': restarts}
    return result


def em_weibull_mixture(sample, model: Optional[WeibullMix2] = None, init=None, tol: float = 1e-8,
                       max_iters: int = _EM_MAX_ITERS) -> EstimatorResult:
    """Generalized EM for the Weibull mixture with known scales: each shape is a weighted 1-d maximization."""
    model = model or WeibullMix2()
    y = _sample(sample)
    if np.any(y <= 0.0):
        raise EstimatorError("Weibull mixture needs positive observations")
    n = y.size
    s1, s2 = model.scales
    lam_lo, nu_lo = model.lower[:2]
    lam_hi, nu_hi = model.upper[:2]
    lam, nu1, nu2 = model.initial_guess(y) if init is None else model.clip_inside(init)

    def shape_step(weights, scale, current):
        def loss(nu):
            return -np.dot(weights, stats.weibull_min.logpdf(y, c=nu, scale=scale))

        found = spo.minimize_scalar(loss, bounds=(nu_lo, nu_hi), method='bounded')
        return found.x if found.fun <= loss(current) else current

    trace = []
    status = FitStatus.MAX_ITERS
    iterations = 0
    for iterations in range(1, max_iters + 1):
        l1 = np.log(lam) + stats.weibull_min.logpdf(y, c=nu1, scale=s1)
        l2 = np.log1p(-lam) + stats.weibull_min.logpdf(y, c=nu2, scale=s2)
        total = np.logaddexp(l1, l2)
        trace.append(float(np.sum(total)))
        if iterations > 1 and trace[-1] - trace[-2] < tol:
            status = FitStatus.CONVERGED
            break
        r = np.exp(l1 - total)
        lam = float(np.clip(r.sum() / n, lam_lo, lam_hi))
        nu1 = shape_step(r, s1, nu1)
        nu2 = shape_step(1.0 - r, s2, nu2)

    result = _closed_form(model, np.array([lam, nu1, nu2]), y)
    result.status = status
    result.nfev = iterations
    result.witnesses = {'loglik_trace': np.array(trace), 'restarts': 0}
    return result


def mle(model, sample, phi0=None, opts: OptimOptions = DEFAULT_OPTIONS, ddof: int = 0) -> EstimatorResult:
    """Maximum likelihood; ddof=1 gives the unbiased Gaussian scale instead of the likelihood maximizer."""
    if ddof not in (0, 1):
        raise InvalidParameterError(f"ddof must be 0 or 1, got {ddof}")
    y = _sample(sample)
    if isinstance(model, GaussianMean):
        return _closed_form(model, np.array([np.mean(y)]), y)
    if isinstance(model, Gaussian):
        return _closed_form(model, np.array([np.mean(y), np.std(y, ddof=ddof)]), y)
    if isinstance(model, GaussMix2):
        return em_gauss_mixture(y, phi0)
    if isinstance(model, WeibullMix2):
        return em_weibull_mixture(y, model, phi0)
    start = starting_point(model, y, phi0, shift=0.0)
    opt = nelder_mead(lambda theta: _negative_loglik(model, theta, y), start, model.bounds, opts)
    return _result_from('mle', model, opt)


# Contamination model


def default_noise_model(model):
    """Location-scale Gaussian noise for real-line families, GPD noise on the half line."""
    return GPD() if model.half_line else Gaussian()


def default_noise_init(noise_model, sample) -> np.ndarray:
    """Noise parameters fitted to the top decile of the sample."""
    y = np.sort(np.asarray(sample, dtype=float))
    top = y[-max(1, y.size // 10):]
    if isinstance(noise_model, GPD):
        return noise_model.clip_inside([1.0, np.mean(top)])
    if isinstance(noise_model, Gaussian):
        scale = max(float(np.std(top, ddof=1)) if top.size > 1 else 0.0, 0.5)
        return noise_model.clip_inside([np.mean(top), scale])
    return noise_model.initial_guess(top)


class _ContaminationObjective:
    """Dual objective whose denominator is (1 - lam) p_alpha + lam q_theta; beta = (alpha, theta, lam)."""

    def __init__(self, model, noise_model, sample, spec, lambda_max, cfg):
        self.model = model
        self.noise_model = noise_model
        self.sample = sample
        self.spec = spec
        self.cfg = cfg
        self.d_alpha = model.dim
        self.d_noise = noise_model.dim
        self.bounds = (np.concatenate([model.lower, noise_model.lower, [0.0]]),
                       np.concatenate([model.upper, noise_model.upper, [lambda_max]]))

    def split(self, beta):
        beta = np.asarray(beta, dtype=float)
        alpha = beta[:self.d_alpha]
        theta = beta[self.d_alpha:self.d_alpha + self.d_noise]
        return alpha, theta, float(beta[-1])

    def start(self, alpha0, noise0, lam0) -> np.ndarray:
        lower, upper = self.bounds
        beta = np.concatenate([alpha0, noise0, [lam0]])
        width = upper - lower
        return np.clip(beta, lower + 1e-6 * width, upper - 1e-6 * width)

    def __call__(self, phi, beta):
        alpha, theta, lam = self.split(beta)
        model, noise = self.model, self.noise_model
        alpha = model.validate(alpha)
        theta = noise.validate(theta)

        def log_den(x):
            return np.logaddexp(np.log1p(-lam) + model.log_pdf(alpha, x), np.log(lam) + noise.log_pdf(theta, x))

        phi = model.validate(phi)
        (lo1, hi1), (lo2, hi2) = model.envelope(alpha), noise.envelope(theta)
        den_range = (min(lo1, lo2), max(hi1, hi2))
        integral = _dual_integral(model, phi, log_den, self.spec, self.cfg, den_range=den_range)
        y = self.sample
        return float(integral - np.mean(phi_sharp_log(self.spec, model.log_pdf(phi, y) - log_den(y))))


def _contamination_setup(model, noise_model, sample, spec, init, lambda_max, cfg):
    if not 0.0 < lambda_max <= DEFAULT_LAMBDA_MAX:
        raise InvalidParameterError(f"lambda_max must lie in (0, {DEFAULT_LAMBDA_MAX}], got {lambda_max}")
    noise_model = noise_model or default_noise_model(model)
    init = dict(init or {})
    objective = _ContaminationObjective(model, noise_model, sample, spec, lambda_max, cfg)
    noise0 = init.get('noise')
    noise0 = default_noise_init(noise_model, sample) if noise0 is None else np.asarray(noise0, dtype=float)
    return objective, noise0, min(float(init.get('lambda', 0.05)), 0.5 * lambda_max)


def contamination_inner_sup(model, noise_model, phi, sample, spec: DivergenceSpec, init=None,
                            lambda_max: float = DEFAULT_LAMBDA_MAX, cfg: QuadratureConfig = DEFAULT_CONFIG,
                            opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    """Sup over (alpha, theta, lam) of the contamination dual objective at fixed phi."""
    y = _sample(sample)
    phi = model.validate(phi)
    objective, noise0, lam0 = _contamination_setup(model, noise_model, y, spec, init, lambda_max, cfg)
    alpha0 = np.asarray((init or {}).get('alpha', phi), dtype=float)
    start = objective.start(model.clip_inside(alpha0), noise0, lam0)
    opt = nelder_mead(lambda beta: -objective(phi, beta), start, objective.bounds, opts.inner())
    alpha, theta, lam = objective.split(opt.x)
    return EstimatorResult('contamination_inner_sup', phi, -float(opt.fun), opt.status, opt.nfev,
                           {'alpha': alpha, 'noise': theta, 'lambda': lam}, opt.message)


def contamination_mdphide(model, sample, spec: DivergenceSpec, noise_model=None, phi0=None, init=None,
                          lambda_max: float = DEFAULT_LAMBDA_MAX, cfg: QuadratureConfig = DEFAULT_CONFIG,
                          opts: OptimOptions = DEFAULT_OPTIONS) -> EstimatorResult:
    """Classical MDphiDE with the dual denominator enlarged by a noise component.

    lambda_max = 0 switches the noise component off and gives the classical estimator.
    """
    y = _sample(sample)
    if lambda_max <= 0.0:
        result = classical_mdphide(model, y, spec, phi0, cfg=cfg, opts=opts)
        result.method = 'contamination_mdphide'
        result.witnesses.update({'noise': None, 'lambda': 0.0})
        return result

    start = starting_point(model, y, phi0)
    objective, noise0, lam0 = _contamination_setup(model, noise_model, y, spec, init, lambda_max, cfg)
    beta0 = objective.start(start, noise0, lam0)
    nested = nested_infsup(objective, start, beta0, model.bounds, objective.bounds, opts)
    alpha, theta, lam = objective.split(nested.alpha)
    return EstimatorResult('contamination_mdphide', model.clip_inside(nested.phi), float(nested.value),
                           nested.status, nested.nfev,
                           {'alpha': alpha, 'noise': theta, 'lambda': lam, 'inner_failures': nested.inner_failures},
                           nested.message)

