"""Error criteria between a fitted density and the true one."""

import logging

import numpy as np
from scipy import optimize

from exceptions import IntegrationError
from quadrature import DEFAULT_CONFIG, QuadratureConfig, integrate, integrate_half_line


_LOGGER = logging.getLogger('simlab')

_SIGN_GRID_POINTS = 4001
_TAIL_POINTS = 400
_HALF_LINE_REACH = 1e12


def _union_envelope(model, theta, theta_true):
    lo1, hi1 = model.envelope(theta)
    lo2, hi2 = model.envelope(theta_true)
    return min(lo1, lo2), max(hi1, hi2)


def chi2_distance(model, theta, theta_true, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """sqrt of the integral of (p - p_T)**2 / p_T; inf when the integral does not exist."""
    theta = model.validate(theta)
    theta_true = model.validate(theta_true)
    if np.array_equal(theta, theta_true):
        return 0.0

    def integrand(x):
        log_true = model.log_pdf(theta_true, x)
        with np.errstate(over='ignore', invalid='ignore', under='ignore'):
            value = np.exp(log_true) * np.expm1(model.log_pdf(theta, x) - log_true) ** 2
        return value

    try:
        if model.half_line:
            value = integrate_half_line(integrand, cfg).value
        else:
            value = integrate(integrand, *_union_envelope(model, theta, theta_true), cfg).value
    except IntegrationError as exc:
        _LOGGER.debug(f"chi2 integral diverges for {theta} against {theta_true}: {exc}")
        return np.inf
    if not np.isfinite(value):
        return np.inf
    return float(np.sqrt(max(value, 0.0)))


def _sign_changes(d, grid):
    """Roots of d bracketed by sign changes along the grid.

    Nodes where d is exactly zero are skipped, so a crossing that falls on a node is
    bracketed by its nonzero neighbours.
    """
    values = d(grid)
    nonzero = np.flatnonzero(values != 0.0)
    roots = []
    for j, k in zip(nonzero[:-1], nonzero[1:]):
        if np.sign(values[j]) != np.sign(values[k]):
            roots.append(optimize.brentq(d, grid[j], grid[k], xtol=1e-12))
    return roots


def tvd(model, theta, theta_true) -> float:
    """Half the L1 distance, summed piecewise between the crossings of the two densities.

    Crossings are searched on a grid over the union of the two envelopes, or up to
    x = 1e12 on the half line; a crossing beyond that is not seen.
    """
    theta = model.validate(theta)
    theta_true = model.validate(theta_true)
    if np.array_equal(theta, theta_true):
        return 0.0

    def difference(x):
        return model.pdf(theta, x) - model.pdf(theta_true, x)

    if model.half_line:
        t = np.linspace(0.0, 1.0, _SIGN_GRID_POINTS)[1:-1]
        grid = t / (1.0 - t)
        grid = np.concatenate([grid, np.geomspace(grid[-1], _HALF_LINE_REACH, _TAIL_POINTS)[1:]])
    else:
        grid = np.linspace(*_union_envelope(model, theta, theta_true), _SIGN_GRID_POINTS)
    roots = _sign_changes(difference, grid)
    cuts = np.array([0.0 if model.half_line else -np.inf] + roots + [np.inf])

    # piece integrals of p - p_T from the distribution functions
    mass = model.cdf(theta, cuts) - model.cdf(theta_true, cuts)
    value = 0.5 * np.sum(np.abs(np.diff(mass)))
    return float(np.clip(value, 0.0, 1.0))
