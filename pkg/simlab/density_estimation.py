"""Kernel density estimates and bandwidth selectors.

Kernels:
    gaussian  symmetric Gaussian kernel, K_nw(x) = (1/nw) sum K((x - y_i)/w)
    gamma     asymmetric gamma kernel on [0, inf)
    rig       reciprocal inverse Gaussian kernel on [0, inf)
    mt        varying kernel estimator on (0, inf), Mellin-transform based,
              with an integer order instead of a window

Gamma and RIG estimates do not integrate to one; they are renormalized once,
when the estimate is built.  All estimates are evaluated in log space through
logsumexp so that far tails never underflow to zero.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize, special

from exceptions import BandwidthError, SupportError, UnsupportedKernelError
from models import ENVELOPE_WIDTH, GaussMix2, Gaussian
from quadrature import DEFAULT_CONFIG, QuadratureConfig, expectation, integrate, integrate_half_line


_LOGGER = logging.getLogger('simlab')

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_LSCV_GRID_POINTS = 30
_MT_MAX_ORDER = 40


class KernelKind(Enum):
    GAUSSIAN = 'gaussian'
    GAMMA = 'gamma'
    RIG = 'rig'
    VARYING = 'mt'

    @property
    def half_line(self) -> bool:
        return self is not KernelKind.GAUSSIAN


class BandwidthRule(Enum):
    FIXED = 'fixed'
    SILVERMAN = 'silverman'
    SHEATHER_JONES = 'sj'
    LSCV = 'lscv'


_RULE_ALIASES = {
    'silverman': BandwidthRule.SILVERMAN,
    'nrd0': BandwidthRule.SILVERMAN,
    'sj': BandwidthRule.SHEATHER_JONES,
    'sheather_jones': BandwidthRule.SHEATHER_JONES,
    'lscv': BandwidthRule.LSCV,
    'cv': BandwidthRule.LSCV,
}


@dataclass(frozen=True)
class KdeSpec:
    """Kernel kind and bandwidth rule; for the mt kernel the bandwidth is the integer order."""
    kernel: KernelKind = KernelKind.GAUSSIAN
    rule: BandwidthRule = BandwidthRule.SILVERMAN
    bandwidth: Optional[float] = None

    def __post_init__(self):
        if self.rule is BandwidthRule.FIXED:
            if self.bandwidth is None or not self.bandwidth > 0.0:
                raise BandwidthError(f"fixed bandwidth must be positive, got {self.bandwidth}")
            if self.kernel is KernelKind.VARYING and (self.bandwidth < 1 or self.bandwidth != int(self.bandwidth)):
                raise BandwidthError(f"mt order must be an integer >= 1, got {self.bandwidth}")
        elif self.kernel is KernelKind.VARYING and self.rule is not BandwidthRule.LSCV:
            raise UnsupportedKernelError(f"the mt estimator takes a fixed order or cross-validation, not {self.rule.value}")

    @classmethod
    def parse(cls, kernel='gaussian', bandwidth='silverman') -> 'KdeSpec':
        """Build from configuration values; bandwidth is a rule name or a number."""
        kind = KernelKind(kernel)
        if isinstance(bandwidth, str):
            try:
                return cls(kind, _RULE_ALIASES[bandwidth.strip().lower()])
            except KeyError:
                raise BandwidthError(f"unknown bandwidth rule '{bandwidth}'") from None
        return cls(kind, BandwidthRule.FIXED, float(bandwidth))

    @property
    def label(self) -> str:
        value = self.rule.value if self.rule is not BandwidthRule.FIXED else f"{self.bandwidth:g}"
        return f"{self.kernel.value}:{value}"


class BandwidthChoice(NamedTuple):
    value: float
    fallback: bool


def _spread(y):
    sd = np.std(y, ddof=1)
    q1, q3 = np.percentile(y, [25, 75])
    return sd, q3 - q1


def bandwidth_silverman(sample) -> float:
    """0.9 min(sd, IQR/1.34) n^(-1/5), R's nrd0."""
    y = np.asarray(sample, dtype=float)
    if y.size < 2:
        raise BandwidthError("Silverman's rule needs at least two observations")
    if np.ptp(y) == 0.0:
        raise BandwidthError("constant sample, Silverman's rule is undefined")
    sd, iqr = _spread(y)
    lo = min(sd, iqr / 1.34)
    if not lo > 0.0:
        # heavily tied data: IQR is zero
        lo = sd
    return float(0.9 * lo * y.size ** -0.2)


def _pair_gaps(y):
    i, j = np.triu_indices(y.size, 1)
    return y[i] - y[j]


def _phi4(gaps, n, h):
    u2 = (gaps / h) ** 2
    total = 2.0 * np.sum((u2 * u2 - 6.0 * u2 + 3.0) * np.exp(-0.5 * u2)) + 3.0 * n
    return total / (n * (n - 1) * h ** 5 * np.sqrt(2.0 * np.pi))


def _phi6(gaps, n, h):
    u2 = (gaps / h) ** 2
    total = 2.0 * np.sum((u2 ** 3 - 15.0 * u2 * u2 + 45.0 * u2 - 15.0) * np.exp(-0.5 * u2)) - 15.0 * n
    return total / (n * (n - 1) * h ** 7 * np.sqrt(2.0 * np.pi))


def _solve_the_equation(y) -> float:
    n = y.size
    sd, iqr = _spread(y)
    scale = min(sd, iqr / 1.349)
    if not scale > 0.0:
        raise BandwidthError("sample spread is zero")
    gaps = _pair_gaps(y)
    a = 1.24 * scale * n ** (-1.0 / 7.0)
    b = 1.23 * scale * n ** (-1.0 / 9.0)
    c1 = 1.0 / (2.0 * np.sqrt(np.pi) * n)
    td = -_phi6(gaps, n, b)
    if not np.isfinite(td) or td <= 0.0:
        raise BandwidthError("sample is too sparse to estimate the sixth derivative functional")
    alpha2 = 1.357 * (_phi4(gaps, n, a) / td) ** (1.0 / 7.0)
    if not np.isfinite(alpha2):
        raise BandwidthError("pilot bandwidth is not finite")

    def fixed_point(h):
        sd4 = _phi4(gaps, n, alpha2 * h ** (5.0 / 7.0))
        if not sd4 > 0.0:
            raise BandwidthError(f"fourth derivative functional not positive at h={h:g}")
        return (c1 / sd4) ** 0.2 - h

    hmax = 1.144 * scale * n ** -0.2
    lower, upper = 0.1 * hmax, hmax
    for attempt in range(100):
        if fixed_point(lower) * fixed_point(upper) <= 0.0:
            break
        if attempt % 2 == 0:
            upper *= 1.2
        else:
            lower /= 1.2
    else:
        raise BandwidthError("no sign change bracketing the solve-the-equation root")
    return float(optimize.bisect(fixed_point, lower, upper, xtol=1e-4 * lower))


def bandwidth_sj(sample) -> BandwidthChoice:
    """Sheather-Jones solve-the-equation bandwidth, Silverman's rule when the solve fails."""
    y = np.asarray(sample, dtype=float)
    if y.size < 10:
        raise BandwidthError(f"Sheather-Jones needs at least 10 observations, got {y.size}")
    try:
        return BandwidthChoice(_solve_the_equation(y), False)
    except (BandwidthError, ValueError, FloatingPointError) as exc:
        _LOGGER.warning(f"Sheather-Jones bandwidth failed ({exc}), using Silverman's rule")
        return BandwidthChoice(bandwidth_silverman(y), True)


def _gaussian_lscv_risk(gaps, n, h):
    """Least-squares CV risk of the Gaussian KDE from the pairwise gaps (i < j)."""
    u2 = (gaps / h) ** 2
    integral_sq = (n + 2.0 * np.sum(np.exp(-0.25 * u2))) / (n * n * 2.0 * h * np.sqrt(np.pi))
    loo = 2.0 * np.sum(np.exp(-0.5 * u2)) / (n * (n - 1) * h * np.sqrt(2.0 * np.pi))
    return integral_sq - 2.0 * loo


def _numeric_lscv_risk(kernel, y, w, cfg):
    """Least-squares CV risk by quadrature for the half-line kernels."""
    log_k = _log_kernel_matrix(kernel, w, y, y)
    mass = 1.0
    if kernel in (KernelKind.GAMMA, KernelKind.RIG):
        mass = integrate_half_line(lambda x: _raw_density(kernel, w, y, x), cfg).value
    log_norm = np.log(mass)
    n = y.size

    def squared(x):
        return (_raw_density(kernel, w, y, x) / mass) ** 2

    integral_sq = integrate_half_line(squared, cfg).value
    np.fill_diagonal(log_k, -np.inf)
    loo = np.exp(special.logsumexp(log_k, axis=1) - np.log(n - 1) - log_norm)
    return integral_sq - 2.0 * np.mean(loo)


def bandwidth_lscv(sample, kernel: KernelKind = KernelKind.GAUSSIAN,
                   cfg: QuadratureConfig = DEFAULT_CONFIG) -> BandwidthChoice:
    """Minimizer of the least-squares CV risk over a log-spaced grid (integer orders for mt)."""
    y = np.asarray(sample, dtype=float)
    if y.size < 10:
        raise BandwidthError(f"cross-validation needs at least 10 observations, got {y.size}")

    if kernel is KernelKind.VARYING:
        grid = np.arange(1, _MT_MAX_ORDER + 1, dtype=float)
    else:
        try:
            reference = bandwidth_silverman(y)
        except BandwidthError:
            reference = 1.0
        grid = np.geomspace(reference / 10.0, reference * 10.0, _LSCV_GRID_POINTS)

    if np.ptp(y) == 0.0:
        _LOGGER.warning("cross-validation on a single-valued sample, using the grid midpoint")
        return BandwidthChoice(float(grid[len(grid) // 2]), True)

    if kernel is KernelKind.GAUSSIAN:
        gaps = _pair_gaps(y)
        risks = np.array([_gaussian_lscv_risk(gaps, y.size, h) for h in grid])
    else:
        risks = np.array([_numeric_lscv_risk(kernel, y, h, cfg) for h in grid])

    finite = np.isfinite(risks)
    if not finite.any() or np.ptp(risks[finite]) <= 1e-12 * (1.0 + np.abs(risks[finite]).max()):
        _LOGGER.warning("cross-validation risk is flat, using the grid midpoint")
        return BandwidthChoice(float(grid[len(grid) // 2]), True)
    best = int(np.argmin(np.where(finite, risks, np.inf)))
    if best in (0, len(grid) - 1):
        _LOGGER.debug(f"cross-validation minimum on the grid edge ({grid[best]:g})")
    return BandwidthChoice(float(grid[best]), False)


def _log_kernel_matrix(kernel, w, x, y):
    """log K evaluated for every (evaluation point, observation) pair, shape (m, n)."""
    xx = np.asarray(x, dtype=float)[:, None]
    yy = np.asarray(y, dtype=float)[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        if kernel is KernelKind.GAUSSIAN:
            z = (xx - yy) / w
            return -0.5 * z * z - np.log(w) - _LOG_SQRT_2PI
        if kernel is KernelKind.GAMMA:
            shape = xx / w
            return shape * np.log(yy) - yy / w - special.gammaln(1.0 + shape) - (1.0 + shape) * np.log(w)
        if kernel is KernelKind.RIG:
            xi = np.maximum(xx - w, 0.5 * w)
            return -0.5 * np.log(2.0 * np.pi * w * yy) - xi / (2.0 * w) * (yy / xi - 2.0 + xi / yy)
        # mt: (1/y)(1/Gamma(a)) (a x / y)**a exp(-a x / y)
        order = float(w)
        ratio = order * xx / yy
        value = -np.log(yy) - special.gammaln(order) + order * np.log(ratio) - ratio
        return np.where(xx > 0.0, value, -np.inf)


def _raw_density(kernel, w, y, x):
    values = np.exp(special.logsumexp(_log_kernel_matrix(kernel, w, np.atleast_1d(x), y), axis=1) - np.log(len(y)))
    return values[0] if np.ndim(x) == 0 else values


class DensityEstimate:
    """Kernel estimate built from a sample; immutable once constructed."""

    def __init__(self, spec: KdeSpec, sample, cfg: QuadratureConfig = DEFAULT_CONFIG):
        y = np.asarray(sample, dtype=float).copy()
        if y.ndim != 1 or y.size < 1:
            raise BandwidthError("a density estimate needs a one dimensional, non-empty sample")
        if spec.kernel.half_line and np.any(y <= 0.0):
            raise SupportError(f"{spec.kernel.value} kernel needs positive observations")
        y.setflags(write=False)
        self.spec = spec
        self.sample = y
        self.bandwidth, self.fallback = self._resolve_bandwidth(spec, y, cfg)
        self.log_norm = 0.0
        if spec.kernel in (KernelKind.GAMMA, KernelKind.RIG):
            mass = integrate_half_line(lambda x: _raw_density(spec.kernel, self.bandwidth, y, x), cfg).value
            self.log_norm = float(np.log(mass))
        _LOGGER.debug(f"Density estimate {spec.label}: bandwidth {self.bandwidth:g}, n={y.size}")

    def __repr__(self):
        return f"DensityEstimate({self.spec.label}, bandwidth={self.bandwidth:g}, n={self.sample.size})"

    @staticmethod
    def _resolve_bandwidth(spec, y, cfg):
        if spec.rule is BandwidthRule.FIXED:
            return float(spec.bandwidth), False
        if spec.rule is BandwidthRule.SILVERMAN:
            return bandwidth_silverman(y), False
        if spec.rule is BandwidthRule.SHEATHER_JONES:
            return tuple(bandwidth_sj(y))
        return tuple(bandwidth_lscv(y, spec.kernel, cfg))

    @property
    def kernel(self) -> KernelKind:
        return self.spec.kernel

    @property
    def half_line(self) -> bool:
        return self.spec.kernel.half_line

    def log_evaluate(self, x):
        """log K_nw(x)."""
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        if self.half_line and np.any(xx < 0.0):
            raise SupportError(f"{self.spec.kernel.value} estimate evaluated at a negative point")
        log_k = _log_kernel_matrix(self.spec.kernel, self.bandwidth, xx, self.sample)
        value = special.logsumexp(log_k, axis=1) - np.log(self.sample.size) - self.log_norm
        return float(value[0]) if np.ndim(x) == 0 else value

    def evaluate(self, x):
        with np.errstate(under='ignore'):
            return np.exp(self.log_evaluate(x))

    __call__ = evaluate

    def envelope(self):
        """Interval holding the mass of the estimate (upper end inf for half-line kernels)."""
        if self.half_line:
            return 0.0, np.inf
        return (float(self.sample.min() - ENVELOPE_WIDTH * self.bandwidth),
                float(self.sample.max() + ENVELOPE_WIDTH * self.bandwidth))


def kde_eval(est: DensityEstimate, x):
    return est.evaluate(x)


def _log_norm_pdf(x, mu, var):
    return -0.5 * (x - mu) ** 2 / var - 0.5 * np.log(2.0 * np.pi * var)


def log_smooth_model(kernel: KernelKind, w, model, theta, x, cfg: QuadratureConfig = DEFAULT_CONFIG):
    """log of the model density smoothed by the kernel, p*(x) = integral of p_theta(y) K_w(x, y) dy."""
    theta = model.validate(theta)
    xx = np.atleast_1d(np.asarray(x, dtype=float))

    if kernel is KernelKind.GAUSSIAN:
        if isinstance(model, Gaussian):
            mu, sigma = model.loc_scale(theta)
            value = _log_norm_pdf(xx, mu, sigma * sigma + w * w)
        elif isinstance(model, GaussMix2):
            lam, mu1, mu2 = theta
            var = 1.0 + w * w
            value = np.logaddexp(np.log(lam) + _log_norm_pdf(xx, mu1, var),
                                 np.log1p(-lam) + _log_norm_pdf(xx, mu2, var))
        else:
            value = np.log(np.array([_gaussian_smoothing(w, model, theta, point, cfg) for point in xx]))
    elif kernel is KernelKind.VARYING:
        if np.any(xx < 0.0):
            raise SupportError("mt smoothing evaluated at a negative point")
        value = np.log(np.array([_mt_smoothing(w, model, theta, point, cfg) for point in xx]))
    else:
        raise UnsupportedKernelError(f"model smoothing is not available for the {kernel.value} kernel")
    return float(value[0]) if np.ndim(x) == 0 else value


def smooth_model(kernel: KernelKind, w, model, theta, x, cfg: QuadratureConfig = DEFAULT_CONFIG):
    with np.errstate(under='ignore', divide='ignore'):
        return np.exp(log_smooth_model(kernel, w, model, theta, x, cfg))


def _gaussian_smoothing(w, model, theta, x, cfg):
    lo, hi = x - ENVELOPE_WIDTH * w, x + ENVELOPE_WIDTH * w
    if model.half_line:
        lo = max(lo, 0.0)
        if hi <= lo:
            return 0.0

    def integrand(y):
        return model.pdf(theta, y) * np.exp(_log_norm_pdf(x, y, w * w))

    return max(integrate(integrand, lo, hi, cfg).value, 0.0)


def _mt_smoothing(order, model, theta, x, cfg):
    if x == 0.0:
        return 0.0
    log_gamma = special.gammaln(order)

    def kernel_at(y):
        y = np.asarray(y, dtype=float)
        ratio = order * x / y
        with np.errstate(divide='ignore', invalid='ignore', under='ignore'):
            value = np.exp(-np.log(y) - log_gamma + order * np.log(ratio) - ratio)
        return np.where(y > 0.0, value, 0.0)

    return max(expectation(kernel_at, model, theta, cfg), 0.0)
