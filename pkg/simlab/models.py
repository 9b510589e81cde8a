"""Parametric model families: densities, parameter derivatives, samplers, quantiles.

Parameter layouts:
    gaussian        (mu, sigma)
    gaussian_mean   (mu,)              scale fixed, 1 unless told otherwise
    gauss_mix2      (lam, mu1, mu2)    unit variances
    gpd             (nu, sigma)        location 0
    weibull_mix2    (lam, nu1, nu2)    scales 0.5 and 2

All density functions take a scalar or an array of abscissas.  Derivatives
come back with the parameter axis first: grad_pdf is (d,) or (d, m), hess_pdf
is (d, d) or (d, d, m).  Points outside the support have density 0 and zero
derivatives.
"""

import logging
from abc import ABC, abstractmethod
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import optimize, special, stats

from exceptions import InvalidParameterError, ModelError


_LOGGER = logging.getLogger('simlab')

# Default bounds boxes
MU_BOUNDS = (-20.0, 20.0)
SIGMA_BOUNDS = (0.05, 20.0)
LAMBDA_BOUNDS = (0.01, 0.99)
NU_BOUNDS = (0.05, 20.0)

# Gaussian supports are truncated this many scales away from the mean
ENVELOPE_WIDTH = 12.0

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)
_BRENTQ_RTOL = 4.0 * np.finfo(float).eps


def _shaped(value, x):
    """Drop the trailing sample axis when x was a scalar."""
    return value[..., 0] if np.ndim(x) == 0 else value


def _norm_logpdf(x, mu, sigma=1.0):
    z = (x - mu) / sigma
    return -0.5 * z * z - np.log(sigma) - _LOG_SQRT_2PI


class Model(ABC):
    """A univariate parametric family with a compact parameter box."""

    name = None
    param_names: Tuple[str, ...] = ()
    half_line = False
    has_analytic_quantile = False

    def __init__(self, lower, upper):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)

    def __repr__(self):
        return f"{type(self).__name__}()"

    @property
    def dim(self) -> int:
        return len(self.param_names)

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.lower, self.upper

    def validate(self, theta) -> np.ndarray:
        """Return theta as a float vector or raise InvalidParameterError."""
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        if th.shape != (self.dim,):
            raise InvalidParameterError(f"{self.name}: expected {self.dim} parameters {self.param_names}, got {th}")
        if not np.all(np.isfinite(th)) or np.any(th < self.lower) or np.any(th > self.upper):
            raise InvalidParameterError(f"{self.name}: parameters {th} outside the box {self.lower}..{self.upper}")
        return th

    def clip_inside(self, theta, margin=1e-6) -> np.ndarray:
        """Move theta strictly inside the box by a small fraction of its width."""
        width = self.upper - self.lower
        return np.clip(np.asarray(theta, dtype=float), self.lower + margin * width, self.upper - margin * width)

    def as_dict(self, theta) -> Dict[str, float]:
        return dict(zip(self.param_names, (float(v) for v in theta)))

    @abstractmethod
    def log_pdf(self, theta, x):
        """log p_theta(x), -inf outside the support."""

    def pdf(self, theta, x):
        with np.errstate(under='ignore'):
            return np.exp(self.log_pdf(theta, x))

    @abstractmethod
    def grad_pdf(self, theta, x):
        """Gradient of p_theta(x) with respect to theta."""

    @abstractmethod
    def hess_pdf(self, theta, x):
        """Hessian of p_theta(x) with respect to theta."""

    @abstractmethod
    def cdf(self, theta, x):
        pass

    @abstractmethod
    def sample(self, theta, n: int, rng: np.random.Generator) -> np.ndarray:
        pass

    @abstractmethod
    def envelope(self, theta) -> Tuple[float, float]:
        """Interval holding all but a negligible part of the mass (upper end may be inf)."""

    @abstractmethod
    def initial_guess(self, sample) -> np.ndarray:
        """Starting point for the optimizers, computed from the data."""

    def quantile(self, theta, u):
        """Inverse cdf; numeric bracketing for families without a closed form."""
        th = self.validate(theta)
        uu = np.atleast_1d(np.asarray(u, dtype=float))
        _check_probabilities(uu)
        lo, hi = self._quantile_bracket(th)
        values = np.array([
            optimize.brentq(lambda x, target=target: self.cdf(th, x) - target, lo, hi, xtol=1e-13, rtol=_BRENTQ_RTOL)
            for target in uu
        ])
        return float(values[0]) if np.ndim(u) == 0 else values

    def _quantile_bracket(self, theta):
        lo, hi = self.envelope(theta)
        return lo, hi

    def power_integral(self, theta, a: float) -> Optional[float]:
        """Closed form of the integral of p**(1 + a), None when not available."""
        return None

    def cross_power_integral(self, theta1, theta2, g: float) -> Optional[float]:
        """Closed form of the integral of p1**g p2**(1 - g), None when not available."""
        return None


def _check_probabilities(u):
    if np.any(u <= 0.0) or np.any(u >= 1.0) or np.any(np.isnan(u)):
        raise ValueError(f"probabilities must lie in (0, 1): {u}")


def gaussian_cross_power(mu1, s1, mu2, s2, g) -> float:
    """Integral of N(mu1, s1^2)**g N(mu2, s2^2)**(1-g) over the real line (inf when divergent)."""
    a = g / s1 ** 2 + (1.0 - g) / s2 ** 2
    if a <= 0.0:
        return np.inf
    b = g * mu1 / s1 ** 2 + (1.0 - g) * mu2 / s2 ** 2
    c = g * mu1 ** 2 / s1 ** 2 + (1.0 - g) * mu2 ** 2 / s2 ** 2
    log_value = -g * np.log(s1) - (1.0 - g) * np.log(s2) - 0.5 * np.log(a) + 0.5 * (b * b / a - c)
    with np.errstate(over='ignore'):
        return float(np.exp(log_value))


class Gaussian(Model):
    name = 'gaussian'
    param_names = ('mu', 'sigma')
    has_analytic_quantile = True

    def __init__(self, mu_bounds=MU_BOUNDS, sigma_bounds=SIGMA_BOUNDS):
        super().__init__([mu_bounds[0], sigma_bounds[0]], [mu_bounds[1], sigma_bounds[1]])

    def loc_scale(self, theta):
        th = self.validate(theta)
        return th[0], th[1]

    def log_pdf(self, theta, x):
        mu, sigma = self.loc_scale(theta)
        return stats.norm.logpdf(x, loc=mu, scale=sigma)

    def grad_pdf(self, theta, x):
        mu, sigma = self.loc_scale(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        z = (xx - mu) / sigma
        p = stats.norm.pdf(z) / sigma
        grad = np.array([p * z / sigma, p * (z * z - 1.0) / sigma])
        return _shaped(grad, x)

    def hess_pdf(self, theta, x):
        mu, sigma = self.loc_scale(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        z = (xx - mu) / sigma
        p = stats.norm.pdf(z) / sigma
        s2 = sigma * sigma
        mm = p * (z * z - 1.0) / s2
        ms = p * z * (z * z - 3.0) / s2
        ss = p * (z ** 4 - 5.0 * z * z + 2.0) / s2
        hess = np.array([[mm, ms], [ms, ss]])
        return _shaped(hess, x)

    def cdf(self, theta, x):
        mu, sigma = self.loc_scale(theta)
        return stats.norm.cdf(x, loc=mu, scale=sigma)

    def quantile(self, theta, u):
        mu, sigma = self.loc_scale(theta)
        uu = np.asarray(u, dtype=float)
        _check_probabilities(np.atleast_1d(uu))
        return stats.norm.ppf(uu, loc=mu, scale=sigma)

    def sample(self, theta, n, rng):
        mu, sigma = self.loc_scale(theta)
        return rng.normal(mu, sigma, size=int(n))

    def envelope(self, theta):
        mu, sigma = self.loc_scale(theta)
        return mu - ENVELOPE_WIDTH * sigma, mu + ENVELOPE_WIDTH * sigma

    def initial_guess(self, sample):
        y = np.asarray(sample, dtype=float)
        return self.clip_inside([np.mean(y), np.std(y, ddof=1)])

    def power_integral(self, theta, a):
        _, sigma = self.loc_scale(theta)
        return float((2.0 * np.pi) ** (-a / 2.0) * sigma ** (-a) / np.sqrt(1.0 + a))

    def cross_power_integral(self, theta1, theta2, g):
        mu1, s1 = self.loc_scale(theta1)
        mu2, s2 = self.loc_scale(theta2)
        return gaussian_cross_power(mu1, s1, mu2, s2, g)


class GaussianMean(Gaussian):
    """Gaussian location family with a known scale."""
    name = 'gaussian_mean'
    param_names = ('mu',)

    def __init__(self, scale=1.0, mu_bounds=MU_BOUNDS):
        Model.__init__(self, [mu_bounds[0]], [mu_bounds[1]])
        self.scale = float(scale)

    def __repr__(self):
        return f"GaussianMean(scale={self.scale:g})"

    def loc_scale(self, theta):
        th = self.validate(theta)
        return th[0], self.scale

    def grad_pdf(self, theta, x):
        full = Gaussian.grad_pdf(self, theta, x)
        return full[:1]

    def hess_pdf(self, theta, x):
        full = Gaussian.hess_pdf(self, theta, x)
        return full[:1, :1]

    def initial_guess(self, sample):
        return self.clip_inside([np.mean(np.asarray(sample, dtype=float))])


class GaussMix2(Model):
    """lam N(mu1, 1) + (1 - lam) N(mu2, 1)."""
    name = 'gauss_mix2'
    param_names = ('lam', 'mu1', 'mu2')

    def __init__(self, lam_bounds=LAMBDA_BOUNDS, mu_bounds=MU_BOUNDS):
        super().__init__([lam_bounds[0], mu_bounds[0], mu_bounds[0]], [lam_bounds[1], mu_bounds[1], mu_bounds[1]])

    def _components(self, theta, x):
        lam, mu1, mu2 = self.validate(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        return lam, mu1, mu2, xx, stats.norm.pdf(xx - mu1), stats.norm.pdf(xx - mu2)

    def log_pdf(self, theta, x):
        lam, mu1, mu2 = self.validate(theta)
        return np.logaddexp(np.log(lam) + _norm_logpdf(x, mu1), np.log1p(-lam) + _norm_logpdf(x, mu2))

    def grad_pdf(self, theta, x):
        lam, mu1, mu2, xx, f1, f2 = self._components(theta, x)
        grad = np.array([f1 - f2, lam * f1 * (xx - mu1), (1.0 - lam) * f2 * (xx - mu2)])
        return _shaped(grad, x)

    def hess_pdf(self, theta, x):
        lam, mu1, mu2, xx, f1, f2 = self._components(theta, x)
        zero = np.zeros_like(xx)
        d1 = xx - mu1
        d2 = xx - mu2
        hess = np.array([
            [zero, f1 * d1, -f2 * d2],
            [f1 * d1, lam * f1 * (d1 * d1 - 1.0), zero],
            [-f2 * d2, zero, (1.0 - lam) * f2 * (d2 * d2 - 1.0)],
        ])
        return _shaped(hess, x)

    def cdf(self, theta, x):
        lam, mu1, mu2 = self.validate(theta)
        return lam * stats.norm.cdf(x - mu1) + (1.0 - lam) * stats.norm.cdf(x - mu2)

    def sample(self, theta, n, rng):
        lam, mu1, mu2 = self.validate(theta)
        first = rng.uniform(size=int(n)) < lam
        return np.where(first, mu1, mu2) + rng.normal(size=int(n))

    def envelope(self, theta):
        _, mu1, mu2 = self.validate(theta)
        return min(mu1, mu2) - ENVELOPE_WIDTH, max(mu1, mu2) + ENVELOPE_WIDTH

    def initial_guess(self, sample):
        y = np.asarray(sample, dtype=float)
        q1, q3 = np.percentile(y, [25, 75])
        return self.clip_inside([0.5, q1, q3])


class GPD(Model):
    """Generalized Pareto distribution with location 0: (1/sigma)(1 + nu y/sigma)**(-1 - 1/nu)."""
    name = 'gpd'
    param_names = ('nu', 'sigma')
    half_line = True
    has_analytic_quantile = True

    def __init__(self, nu_bounds=NU_BOUNDS, sigma_bounds=SIGMA_BOUNDS):
        super().__init__([nu_bounds[0], sigma_bounds[0]], [nu_bounds[1], sigma_bounds[1]])

    def log_pdf(self, theta, x):
        nu, sigma = self.validate(theta)
        return stats.genpareto.logpdf(x, c=nu, scale=sigma)

    def _log_derivatives(self, theta, x):
        """p, gradient and hessian of log p on the support (zeros elsewhere)."""
        nu, sigma = self.validate(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        inside = xx >= 0.0
        y = np.where(inside, xx, 0.0)
        den = sigma + nu * y
        log_u = np.log1p(nu * y / sigma)
        g_nu = log_u / nu ** 2 - (1.0 + 1.0 / nu) * y / den
        g_sigma = -1.0 / sigma + (nu + 1.0) * y / (sigma * den)
        h_nn = -2.0 * log_u / nu ** 3 + 2.0 * y / (nu ** 2 * den) + (1.0 + 1.0 / nu) * y ** 2 / den ** 2
        h_ns = y * (sigma - y) / (sigma * den ** 2)
        h_ss = 1.0 / sigma ** 2 - (nu + 1.0) * y * (2.0 * sigma + nu * y) / (sigma ** 2 * den ** 2)
        p = np.where(inside, stats.genpareto.pdf(y, c=nu, scale=sigma), 0.0)
        return xx, p, np.array([g_nu, g_sigma]), np.array([[h_nn, h_ns], [h_ns, h_ss]])

    def grad_pdf(self, theta, x):
        _, p, g, _ = self._log_derivatives(theta, x)
        return _shaped(p * g, x)

    def hess_pdf(self, theta, x):
        _, p, g, h = self._log_derivatives(theta, x)
        outer = g[:, None, :] * g[None, :, :]
        return _shaped(p * (outer + h), x)

    def cdf(self, theta, x):
        nu, sigma = self.validate(theta)
        return stats.genpareto.cdf(x, c=nu, scale=sigma)

    def quantile(self, theta, u):
        nu, sigma = self.validate(theta)
        uu = np.asarray(u, dtype=float)
        _check_probabilities(np.atleast_1d(uu))
        # (sigma/nu)((1-u)**(-nu) - 1)
        value = sigma / nu * np.expm1(-nu * np.log1p(-uu))
        return float(value) if np.ndim(u) == 0 else value

    def sample(self, theta, n, rng):
        return np.atleast_1d(self.quantile(theta, rng.uniform(size=int(n))))

    def envelope(self, theta):
        return 0.0, np.inf

    def initial_guess(self, sample):
        y = np.asarray(sample, dtype=float)
        nu = 0.5
        # median of GPD(nu, sigma) is sigma (2**nu - 1)/nu
        sigma = np.median(y) * nu / (2.0 ** nu - 1.0)
        return self.clip_inside([nu, sigma])

    def power_integral(self, theta, a):
        nu, sigma = self.validate(theta)
        return float(sigma ** (-a) / (a * (nu + 1.0) + 1.0))


WEIBULL_SCALES = (0.5, 2.0)


class WeibullMix2(Model):
    """lam W(nu1, scale 0.5) + (1 - lam) W(nu2, scale 2)."""
    name = 'weibull_mix2'
    param_names = ('lam', 'nu1', 'nu2')
    half_line = True

    def __init__(self, lam_bounds=LAMBDA_BOUNDS, nu_bounds=NU_BOUNDS, scales=WEIBULL_SCALES):
        super().__init__([lam_bounds[0], nu_bounds[0], nu_bounds[0]], [lam_bounds[1], nu_bounds[1], nu_bounds[1]])
        self.scales = tuple(float(s) for s in scales)

    @staticmethod
    def _component(nu, scale, xx):
        """Density, d log f/d nu and d2 log f/d nu2 of one Weibull component (zero off the support)."""
        inside = xx > 0.0
        y = np.where(inside, xx, scale)
        log_ratio = np.log(y / scale)
        r = np.exp(nu * log_ratio)
        log_f = np.log(nu / scale) + (nu - 1.0) * log_ratio - r
        with np.errstate(under='ignore'):
            f = np.where(inside, np.exp(log_f), 0.0)
        h = 1.0 / nu + log_ratio - r * log_ratio
        dh = -1.0 / nu ** 2 - r * log_ratio ** 2
        return np.where(inside, log_f, -np.inf), f, h, dh

    def log_pdf(self, theta, x):
        lam, nu1, nu2 = self.validate(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        l1, _, _, _ = self._component(nu1, self.scales[0], xx)
        l2, _, _, _ = self._component(nu2, self.scales[1], xx)
        value = np.logaddexp(np.log(lam) + l1, np.log1p(-lam) + l2)
        return float(value[0]) if np.ndim(x) == 0 else value

    def grad_pdf(self, theta, x):
        lam, nu1, nu2 = self.validate(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        _, f1, h1, _ = self._component(nu1, self.scales[0], xx)
        _, f2, h2, _ = self._component(nu2, self.scales[1], xx)
        grad = np.array([f1 - f2, lam * f1 * h1, (1.0 - lam) * f2 * h2])
        return _shaped(grad, x)

    def hess_pdf(self, theta, x):
        lam, nu1, nu2 = self.validate(theta)
        xx = np.atleast_1d(np.asarray(x, dtype=float))
        _, f1, h1, dh1 = self._component(nu1, self.scales[0], xx)
        _, f2, h2, dh2 = self._component(nu2, self.scales[1], xx)
        zero = np.zeros_like(xx)
        hess = np.array([
            [zero, f1 * h1, -f2 * h2],
            [f1 * h1, lam * f1 * (h1 * h1 + dh1), zero],
            [-f2 * h2, zero, (1.0 - lam) * f2 * (h2 * h2 + dh2)],
        ])
        return _shaped(hess, x)

    def cdf(self, theta, x):
        lam, nu1, nu2 = self.validate(theta)
        s1, s2 = self.scales
        return (lam * stats.weibull_min.cdf(x, c=nu1, scale=s1)
                + (1.0 - lam) * stats.weibull_min.cdf(x, c=nu2, scale=s2))

    def sample(self, theta, n, rng):
        lam, nu1, nu2 = self.validate(theta)
        s1, s2 = self.scales
        first = rng.uniform(size=int(n)) < lam
        return np.where(first, s1 * rng.weibull(nu1, size=int(n)), s2 * rng.weibull(nu2, size=int(n)))

    def envelope(self, theta):
        return 0.0, np.inf

    def _quantile_bracket(self, theta):
        _, nu1, nu2 = theta
        s1, s2 = self.scales
        # survival exp(-40) in both components
        return 0.0, max(s1 * 40.0 ** (1.0 / nu1), s2 * 40.0 ** (1.0 / nu2))

    def initial_guess(self, sample):
        return self.clip_inside([0.5, 1.0, 1.0])


class FixedMixture:
    """Finite Gaussian mixture with fixed weights, used as a data-generating truth."""

    def __init__(self, weights, means, sds):
        self.weights = np.asarray(weights, dtype=float)
        self.means = np.asarray(means, dtype=float)
        self.sds = np.asarray(sds, dtype=float)
        if not (self.weights.shape == self.means.shape == self.sds.shape):
            raise InvalidParameterError("mixture weights, means and sds must have the same length")
        if np.any(self.weights <= 0.0) or abs(self.weights.sum() - 1.0) > 1e-12 or np.any(self.sds <= 0.0):
            raise InvalidParameterError(f"invalid mixture weights {self.weights} or sds {self.sds}")

    def __repr__(self):
        return f"FixedMixture(weights={self.weights.tolist()}, means={self.means.tolist()}, sds={self.sds.tolist()})"

    def log_pdf(self, x):
        xx = np.asarray(x, dtype=float)
        terms = [np.log(w) + _norm_logpdf(xx, m, s) for w, m, s in zip(self.weights, self.means, self.sds)]
        return special.logsumexp(np.stack(terms), axis=0)

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def sample(self, n, rng):
        labels = rng.choice(len(self.weights), size=int(n), p=self.weights)
        return self.means[labels] + self.sds[labels] * rng.normal(size=int(n))

    def smoothed(self, w) -> 'FixedMixture':
        """Convolution with a Gaussian kernel of window w."""
        return FixedMixture(self.weights, self.means, np.sqrt(self.sds ** 2 + w * w))

    def envelope(self):
        return (float(np.min(self.means - ENVELOPE_WIDTH * self.sds)),
                float(np.max(self.means + ENVELOPE_WIDTH * self.sds)))


_MODELS = {
    'gaussian': Gaussian,
    'gaussian_mean': GaussianMean,
    'gauss_mix2': GaussMix2,
    'gpd': GPD,
    'weibull_mix2': WeibullMix2,
}


def make_model(name: str, **kwargs) -> Model:
    """Model family by configuration name."""
    try:
        return _MODELS[name](**kwargs)
    except KeyError:
        raise ModelError(f"unknown model '{name}', expected one of {sorted(_MODELS)}") from None
