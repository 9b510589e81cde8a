"""Numerical integration: adaptive Gauss-Kronrod with a Gauss-Legendre fallback.

The adaptive rule is QUADPACK's through scipy.integrate.quad.  When it reports
a problem the integral is recomputed with a fixed Gauss-Legendre rule and the
two answers must agree to within 100 tolerances (plus the adaptive error
estimate), otherwise IntegrationError is raised.

Integrands must accept numpy arrays: the fallback evaluates all its nodes in
one call.
"""

import logging
import os
import warnings
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate as spi

from exceptions import IntegrationError, ModelError, NonFiniteIntegrandError


_LOGGER = logging.getLogger('simlab')

_TOLERANCE_ENV_VAR = 'SIMLAB_QUAD_TOL'
_FALLBACK_AGREEMENT = 100.0


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-6
    max_subdivisions: int = 200
    fallback_gl_points: int = 100

    def __post_init__(self):
        if self.abs_tol <= 0.0 or self.rel_tol <= 0.0:
            raise ValueError(f"quadrature tolerances must be positive: {self.abs_tol}, {self.rel_tol}")
        if self.max_subdivisions < 1 or self.fallback_gl_points < 2:
            raise ValueError("quadrature needs at least one subdivision and two fallback points")

    @classmethod
    def from_options(cls, options=None) -> 'QuadratureConfig':
        """Build from a settings dictionary; SIMLAB_QUAD_TOL overrides both tolerances."""
        cfg = cls(**dict(options or {}))
        override = os.getenv(_TOLERANCE_ENV_VAR)
        if override:
            try:
                tol = float(override)
            except ValueError:
                _LOGGER.warning(f"Ignoring {_TOLERANCE_ENV_VAR}='{override}', not a number")
            else:
                cfg = replace(cfg, abs_tol=tol, rel_tol=tol)
        return cfg

    def tolerance(self, value: float) -> float:
        return max(self.abs_tol, self.rel_tol * abs(value))


DEFAULT_CONFIG = QuadratureConfig()


class QuadratureResult(NamedTuple):
    value: float
    error: float
    method: str


@lru_cache(maxsize=8)
def _legendre(points: int):
    return np.polynomial.legendre.leggauss(points)


def _checked(f: Callable) -> Callable:
    """Wrap f so that a non-finite value raises with the offending abscissa."""
    def wrapped(x):
        value = np.asarray(f(x), dtype=float)
        if not np.all(np.isfinite(value)):
            if np.ndim(x) == 0:
                raise NonFiniteIntegrandError(float(x), value)
            bad = ~np.isfinite(np.broadcast_to(value, np.shape(x)))
            index = int(np.flatnonzero(bad)[0])
            raise NonFiniteIntegrandError(float(np.asarray(x)[index]), value[index])
        return value
    return wrapped


def gauss_legendre(f: Callable, a: float, b: float, points: int) -> float:
    nodes, weights = _legendre(int(points))
    half = 0.5 * (b - a)
    x = a + half * (nodes + 1.0)
    return float(half * np.dot(weights, np.asarray(f(x), dtype=float)))


def integrate(f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> QuadratureResult:
    """Integral of f over the finite interval [a, b]."""
    if not (np.isfinite(a) and np.isfinite(b)):
        raise IntegrationError(f"integrate needs a finite interval, got [{a}, {b}]")
    if a >= b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 'empty')
        raise IntegrationError(f"integration bounds reversed: [{a}, {b}]")

    g = _checked(f)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', spi.IntegrationWarning)
        output = spi.quad(g, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions,
                          full_output=1)
    value, error = float(output[0]), float(output[1])
    if len(output) < 4 and np.isfinite(value):
        return QuadratureResult(value, error, 'adaptive')

    message = output[3] if len(output) > 3 else 'non-finite result'
    fallback = gauss_legendre(g, a, b, cfg.fallback_gl_points)
    allowed = _FALLBACK_AGREEMENT * cfg.tolerance(fallback) + (error if np.isfinite(error) else 0.0)
    if not np.isfinite(fallback) or (np.isfinite(value) and abs(fallback - value) > allowed):
        raise IntegrationError(
            f"quadrature on [{a:g}, {b:g}] did not converge ({message.splitlines()[0]}); "
            f"adaptive {value:.10g} vs Gauss-Legendre {fallback:.10g}")
    _LOGGER.debug(f"Gauss-Legendre fallback on [{a:g}, {b:g}]: {fallback:.10g} (adaptive {value:.10g})")
    return QuadratureResult(fallback, abs(fallback - value) if np.isfinite(value) else np.nan, 'gauss_legendre')


def integrate_vector(f: Callable, a: float, b: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Componentwise integral of a vector-valued f over [a, b]."""
    g = _checked(f)
    with warnings.catch_warnings():
        warnings.simplefilter('ignore', spi.IntegrationWarning)
        value, error, info = spi.quad_vec(g, a, b, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
                                          limit=cfg.max_subdivisions, full_output=True)
    value = np.asarray(value, dtype=float)
    if info.success and np.all(np.isfinite(value)):
        return value

    nodes, weights = _legendre(cfg.fallback_gl_points)
    half = 0.5 * (b - a)
    samples = np.stack([np.asarray(g(a + half * (t + 1.0)), dtype=float) for t in nodes])
    fallback = half * np.tensordot(weights, samples, axes=1)
    allowed = _FALLBACK_AGREEMENT * np.maximum(cfg.abs_tol, cfg.rel_tol * np.abs(fallback)) + error
    if not np.all(np.isfinite(fallback)) or np.any(np.abs(fallback - value) > allowed):
        raise IntegrationError(f"vector quadrature on [{a:g}, {b:g}] did not converge: {info.message}")
    _LOGGER.debug(f"Gauss-Legendre fallback for vector integral on [{a:g}, {b:g}]")
    return fallback


def _half_line_integrand(f: Callable) -> Callable:
    def g(t):
        t = np.asarray(t, dtype=float)
        one_minus = 1.0 - t
        return np.asarray(f(t / one_minus), dtype=float) / (one_minus * one_minus)
    return g


def integrate_half_line(f: Callable, cfg: QuadratureConfig = DEFAULT_CONFIG) -> QuadratureResult:
    """Integral of f over [0, inf) through x = t/(1 - t) on [0, 1)."""
    return integrate(_half_line_integrand(f), 0.0, 1.0, cfg)


def integrate_half_line_vector(f: Callable, cfg: QuadratureConfig = DEFAULT_CONFIG) -> np.ndarray:
    return integrate_vector(_half_line_integrand(f), 0.0, 1.0, cfg)


def integrate_via_quantile(g: Callable, model, theta, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of g p_theta over the support, computed as the integral of g(F^-1(u)) on (0, 1)."""
    if not model.has_analytic_quantile:
        raise ModelError(f"{model.name} has no closed-form quantile")
    theta = model.validate(theta)

    def h(u):
        return g(model.quantile(theta, u))

    return integrate(h, 0.0, 1.0, cfg).value


def expectation(g: Callable, model, theta, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Integral of g p_theta over the support by the route suited to the family.

    Half-line families with a closed-form quantile use the quantile substitution,
    other half-line families the t/(1-t) substitution, real-line families their
    envelope.
    """
    if model.half_line:
        if model.has_analytic_quantile:
            return integrate_via_quantile(g, model, theta, cfg)

        def weighted(x):
            return np.asarray(g(x), dtype=float) * model.pdf(theta, x)

        return integrate_half_line(weighted, cfg).value

    a, b = model.envelope(theta)
    return integrate(lambda x: np.asarray(g(x), dtype=float) * model.pdf(theta, x), a, b, cfg).value
