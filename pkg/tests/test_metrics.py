"""Chi-square distance and total variation between fitted and true densities."""

import numpy as np
import pytest
from scipy import integrate as spi
from scipy import stats

from metrics import chi2_distance, tvd
from models import GPD, GaussMix2, Gaussian, WeibullMix2


class TestTotalVariation:

    def test_unit_shift(self):
        # 2 Phi(1/2) - 1
        assert tvd(Gaussian(), [1.0, 1.0], [0.0, 1.0]) == pytest.approx(0.3829, abs=1e-4)
        assert tvd(Gaussian(), [1.0, 1.0], [0.0, 1.0]) == pytest.approx(2.0 * stats.norm.cdf(0.5) - 1.0, abs=1e-10)

    @pytest.mark.parametrize("theta, truth", [
        ([1.0, 1.0], [0.0, 1.0]), ([2.0, 1.0], [0.0, 1.0]), ([0.5, 1.0], [-0.5, 1.0]),
        ([-3.0, 1.0], [0.0, 1.0]), ([0.25, 1.0], [0.0, 1.0]),
    ])
    def test_location_shifts(self, theta, truth):
        # the crossing sits at the midpoint, which may fall exactly on a grid node
        delta = abs(theta[0] - truth[0])
        assert tvd(Gaussian(), theta, truth) == pytest.approx(2.0 * stats.norm.cdf(delta / 2.0) - 1.0, abs=1e-10)

    def test_heavy_tail_on_half_line(self):
        model = GPD()
        theta, truth = [1.2, 3.0], [0.7, 3.0]
        half_l1, _ = spi.quad(lambda x: abs(model.pdf(theta, x) - model.pdf(truth, x)), 0.0, np.inf, limit=400)
        assert tvd(model, theta, truth) == pytest.approx(0.5 * half_l1, abs=1e-4)

    def test_zero_at_equality(self):
        assert tvd(GaussMix2(), [0.35, -2.0, 1.5], [0.35, -2.0, 1.5]) == 0.0

    def test_symmetric(self):
        model = Gaussian()
        assert tvd(model, [0.3, 2.0], [0.0, 1.0]) == pytest.approx(tvd(model, [0.0, 1.0], [0.3, 2.0]), abs=1e-10)

    @pytest.mark.parametrize("model, theta, truth", [
        (Gaussian(), [0.3, 2.0], [0.0, 1.0]),
        (GaussMix2(), [0.5, -1.0, 2.0], [0.35, -2.0, 1.5]),
        (GPD(), [1.0, 2.0], [0.7, 3.0]),
        (WeibullMix2(), [0.5, 1.5, 3.0], [0.35, 1.2, 2.0]),
    ], ids=['gaussian', 'gauss_mix2', 'gpd', 'weibull_mix2'])
    def test_matches_quadrature(self, model, theta, truth):
        lo, hi = model.envelope(truth)
        if np.isfinite(hi):
            lo, hi = min(lo, model.envelope(theta)[0]), max(hi, model.envelope(theta)[1])
        half_l1, _ = spi.quad(lambda x: abs(model.pdf(theta, x) - model.pdf(truth, x)), lo, hi, limit=400)
        assert tvd(model, theta, truth) == pytest.approx(0.5 * half_l1, abs=1e-5)

    def test_bounded(self):
        assert 0.0 <= tvd(Gaussian(), [15.0, 0.1], [-15.0, 0.1]) <= 1.0


class TestChiSquare:

    def test_gaussian_shift(self):
        # integral of (p - p_T)^2 / p_T is exp(delta^2) - 1 for unit-variance shifts
        assert chi2_distance(Gaussian(), [1.0, 1.0], [0.0, 1.0]) == pytest.approx(np.sqrt(np.e - 1.0), rel=1e-6)

    def test_zero_at_equality(self):
        assert chi2_distance(GPD(), [0.7, 3.0], [0.7, 3.0]) == 0.0

    def test_divergent_integral_is_infinite(self):
        # the fitted scale is too wide for the true tails
        assert chi2_distance(Gaussian(), [0.0, 3.0], [0.0, 1.0]) == np.inf

    def test_half_line(self):
        model = GPD()
        theta, truth = [0.6, 3.2], [0.7, 3.0]
        value, _ = spi.quad(lambda x: (model.pdf(theta, x) - model.pdf(truth, x)) ** 2 / model.pdf(truth, x),
                            0.0, np.inf, limit=200)
        assert chi2_distance(model, theta, truth) == pytest.approx(np.sqrt(value), rel=1e-4)
