"""Estimators on small samples: dual objectives, robustness and agreement with maximum likelihood."""

import numpy as np
import pytest
from scipy import integrate as spi
from scipy import stats

import estimators
from density_estimation import DensityEstimate, KdeSpec
from divergence_core import DivergenceSpec
from estimators import (
    EstimatorResult, basu_lindsay, beran, classical_mdphide, contamination_inner_sup, contamination_mdphide,
    default_noise_init, default_noise_model, divergence_between, dphide, dual_inner_objective, dual_integral_term,
    em_gauss_mixture, em_weibull_mixture, kernel_dual_objective, kernel_mdphide, mle, mpd, mpd_objective,
    starting_point,
)
from exceptions import EstimatorError, FitStatus, InvalidParameterError, UnsupportedKernelError
from models import GPD, GaussMix2, Gaussian, WeibullMix2


HELLINGER = DivergenceSpec.hellinger()


def _contaminated(rng, n=100, k=10, value=10.0):
    y = rng.normal(size=n)
    y[np.argsort(y)[-k:]] = value
    return y


def _clean_mean(y, value=10.0):
    return float(np.mean(y[y != value]))


class TestResult:

    def test_ok(self):
        assert EstimatorResult('mle', np.zeros(2), 1.0, FitStatus.MAX_ITERS).ok
        assert not EstimatorResult('mle', np.zeros(2), np.inf, FitStatus.CONVERGED).ok
        assert not EstimatorResult('mle', np.zeros(2), 1.0, FitStatus.ABORTED).ok

    def test_starting_point(self, rng):
        model = Gaussian()
        y = rng.normal(2.0, 3.0, size=50)
        start = starting_point(model, y, shift=0.0)
        np.testing.assert_allclose(start, [np.mean(y), np.std(y, ddof=1)])
        shifted = starting_point(model, y)
        np.testing.assert_allclose(shifted - start, 0.0025 * (model.upper - model.lower))
        np.testing.assert_allclose(starting_point(model, y, [1.0, 1.0]), [1.0, 1.0])

    def test_sample_must_be_a_vector(self):
        with pytest.raises(EstimatorError):
            mle(Gaussian(), [1.0])


class TestDualObjective:

    def test_zero_on_the_diagonal(self, rng):
        y = rng.normal(size=30)
        assert dual_inner_objective(Gaussian(), [0.3, 1.2], [0.3, 1.2], y, HELLINGER) == 0.0

    @pytest.mark.parametrize("gamma", [0.5, 2.0, -0.5])
    def test_closed_form_integral_matches_quadrature(self, gamma, cfg):
        model = Gaussian()
        spec = DivergenceSpec.cressie_read(gamma)
        phi, alpha = np.array([0.4, 1.1]), np.array([-0.2, 1.3])
        numeric = estimators._dual_integral(model, phi, lambda x: model.log_pdf(alpha, x), spec, cfg)
        assert dual_integral_term(model, phi, alpha, spec, cfg) == pytest.approx(numeric, rel=1e-6)

    @pytest.mark.parametrize("a", [0.25, 0.5])
    def test_negative_gamma_is_a_power_divergence(self, a, rng):
        # with gamma = -a and r = p_alpha / p_escort the dual objective is an affine
        # image of int r**(1+a) dP_escort - (1 + 1/a) mean r**a
        model = Gaussian()
        spec = DivergenceSpec.cressie_read(-a)
        y = rng.normal(size=40)
        for _ in range(5):
            escort = np.array([rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.2)])
            alpha = np.array([rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.2)])
            integral, _ = spi.quad(
                lambda x: np.exp((1.0 + a) * stats.norm.logpdf(x, *alpha) - a * stats.norm.logpdf(x, *escort)),
                -np.inf, np.inf, epsabs=1e-12)
            ratio = stats.norm.pdf(y, *alpha) / stats.norm.pdf(y, *escort)
            power = integral - (1.0 + 1.0 / a) * np.mean(ratio ** a)
            dual = dual_inner_objective(model, escort, alpha, y, spec)
            assert power == pytest.approx(-(1.0 + a) * dual - 1.0 / a, rel=1e-6, abs=1e-9)

    def test_modified_kl_integral_vanishes(self):
        assert dual_integral_term(Gaussian(), [0.0, 1.0], [1.0, 2.0], DivergenceSpec.modified_kl()) == 0.0

    def test_attains_the_divergence_at_the_truth(self, rng):
        model = Gaussian()
        truth, phi = np.array([0.0, 1.0]), np.array([0.5, 1.0])
        y = model.sample(truth, 20000, rng)
        dual = dual_inner_objective(model, phi, truth, y, HELLINGER)
        # Hellinger divergence between N(0.5, 1) and N(0, 1)
        expected = (np.exp(-0.25 * 0.25 / 2.0) - 1.0) / (0.5 * -0.5)
        assert dual == pytest.approx(expected, abs=0.015)

    def test_divergence_between(self):
        model = Gaussian()
        value = divergence_between(HELLINGER, lambda x: model.log_pdf([0.5, 1.0], x),
                                   lambda x: model.log_pdf([0.0, 1.0], x), -15.0, 15.0)
        assert value == pytest.approx((np.exp(-0.25 * 0.25 / 2.0) - 1.0) / -0.25, rel=1e-6)

    def test_divergence_between_half_line(self):
        model = GPD()
        p, q = [0.5, 2.0], [0.5, 2.0]
        value = divergence_between(HELLINGER, lambda x: model.log_pdf(p, x), lambda x: model.log_pdf(q, x),
                                   0.0, np.inf)
        assert value == pytest.approx(0.0, abs=1e-5)

    def test_kernel_objective_needs_positive_estimate(self, rng):
        y = rng.gamma(2.0, size=30)
        kde = DensityEstimate(KdeSpec.parse('mt', 10), y)
        # the mt estimate vanishes at the origin
        with pytest.raises(EstimatorError):
            kernel_dual_objective(GPD(), [0.5, 2.0], kde, np.append(y, 0.0), HELLINGER)

    def test_kernel_modified_kl_counts_mass_outside_the_model(self, rng):
        # the estimate sits almost entirely outside the envelope of the model; both masses are 1
        y = rng.normal(size=50)
        kde = DensityEstimate(KdeSpec(), y)
        model, phi = Gaussian(), [8.0, 0.5]
        expected = -np.mean(model.log_pdf(phi, y) - kde.log_evaluate(y))
        value = kernel_dual_objective(model, phi, kde, y, DivergenceSpec.modified_kl())
        assert value == pytest.approx(expected, rel=1e-5)


class TestAgreementWithMaximumLikelihood:
    """Estimators that coincide with the MLE on clean Gaussian samples."""

    @pytest.mark.parametrize("seed", [1, 2])
    def test_classical_dual_is_the_mle(self, seed):
        model = Gaussian()
        y = model.sample([0.0, 1.0], 100, np.random.default_rng(seed))
        classical = classical_mdphide(model, y, HELLINGER)
        reference = mle(model, y)
        assert classical.ok
        np.testing.assert_allclose(classical.theta_hat, reference.theta_hat, atol=5e-3)

    @pytest.mark.parametrize("seed", [3, 4])
    def test_kernel_modified_kl_is_the_mle(self, seed):
        model = Gaussian()
        y = model.sample([0.0, 1.0], 100, np.random.default_rng(seed))
        kernel = kernel_mdphide(model, y, KdeSpec(), DivergenceSpec.modified_kl())
        np.testing.assert_allclose(kernel.theta_hat, mle(model, y).theta_hat, atol=1e-3)


class TestCleanData:

    @pytest.fixture
    def sample(self):
        return Gaussian().sample([0.0, 1.0], 100, np.random.default_rng(11))

    def test_kernel_mdphide(self, sample, fast_opts):
        result = kernel_mdphide(Gaussian(), sample, KdeSpec(), HELLINGER, opts=fast_opts)
        assert result.ok
        np.testing.assert_allclose(result.theta_hat, [0.0, 1.0], atol=0.35)
        assert result.witnesses['bandwidth'] > 0.0

    def test_beran(self, sample, fast_opts):
        result = beran(Gaussian(), sample, KdeSpec(), HELLINGER, opts=fast_opts)
        np.testing.assert_allclose(result.theta_hat, [0.0, 1.0], atol=0.35)

    def test_basu_lindsay(self, sample, fast_opts):
        result = basu_lindsay(Gaussian(), sample, KdeSpec(), HELLINGER, opts=fast_opts)
        np.testing.assert_allclose(result.theta_hat, [0.0, 1.0], atol=0.35)

    def test_basu_lindsay_kernel_restriction(self, sample):
        with pytest.raises(UnsupportedKernelError):
            basu_lindsay(GPD(), np.abs(sample) + 0.1, KdeSpec.parse('gamma', 0.1), HELLINGER)

    def test_mpd(self, sample, fast_opts):
        result = mpd(Gaussian(), sample, 0.5, opts=fast_opts)
        np.testing.assert_allclose(result.theta_hat, [0.0, 1.0], atol=0.35)
        assert result.witnesses['a'] == 0.5

    @pytest.mark.parametrize("a", [0.0, 1.5, -0.1])
    def test_mpd_tradeoff_range(self, sample, a):
        with pytest.raises(InvalidParameterError):
            mpd(Gaussian(), sample, a)

    def test_mpd_objective_uses_closed_form(self, sample):
        model = Gaussian()
        theta = [0.2, 1.1]
        a = 0.5
        power = model.power_integral(theta, a)
        expected = power - 3.0 * np.mean(stats.norm.pdf(sample, 0.2, 1.1) ** a)
        assert mpd_objective(model, theta, sample, a) == pytest.approx(expected, rel=1e-10)

    def test_dphide_at_the_truth(self, sample, fast_opts):
        result = dphide(Gaussian(), [0.0, 1.0], sample, HELLINGER, opts=fast_opts)
        np.testing.assert_allclose(result.theta_hat, [0.0, 1.0], atol=0.35)
        np.testing.assert_allclose(result.witnesses['escort'], [0.0, 1.0], atol=1e-5)


class TestContaminatedData:
    """Ten largest of 100 standard normal draws replaced by 10."""

    @pytest.fixture
    def sample(self):
        return _contaminated(np.random.default_rng(5))

    def test_mle_is_dragged(self, sample):
        assert mle(Gaussian(), sample).theta_hat[0] > 0.6

    def test_kernel_mdphide_resists(self, sample, fast_opts):
        result = kernel_mdphide(Gaussian(), sample, KdeSpec(), HELLINGER, opts=fast_opts)
        assert result.theta_hat[0] == pytest.approx(_clean_mean(sample), abs=0.25)
        assert result.theta_hat[1] < 1.5

    def test_mpd_resists(self, sample, fast_opts):
        result = mpd(Gaussian(), sample, 0.5, opts=fast_opts)
        assert abs(result.theta_hat[0]) < 0.4
        clean = _clean_mean(sample)
        assert abs(result.theta_hat[0] - clean) < abs(mle(Gaussian(), sample).theta_hat[0] - clean)


class TestMaximumLikelihood:

    def test_gaussian_closed_form(self, rng):
        y = rng.normal(1.0, 2.0, size=40)
        result = mle(Gaussian(), y)
        np.testing.assert_allclose(result.theta_hat, [np.mean(y), np.std(y)])
        assert result.status is FitStatus.CONVERGED

    def test_gaussian_unbiased_scale(self, rng):
        y = rng.normal(1.0, 2.0, size=40)
        np.testing.assert_allclose(mle(Gaussian(), y, ddof=1).theta_hat, [np.mean(y), np.std(y, ddof=1)])
        with pytest.raises(InvalidParameterError):
            mle(Gaussian(), y, ddof=2)

    def test_em_gauss_mixture(self):
        model = GaussMix2()
        y = model.sample([0.35, -2.0, 1.5], 2000, np.random.default_rng(8))
        result = em_gauss_mixture(y)
        np.testing.assert_allclose(result.theta_hat, [0.35, -2.0, 1.5], atol=0.1)
        trace = result.witnesses['loglik_trace']
        assert np.all(np.diff(trace) >= -1e-8)
        assert result.theta_hat[1] < result.theta_hat[2]

    def test_em_orders_components(self):
        model = GaussMix2()
        y = model.sample([0.35, -2.0, 1.5], 500, np.random.default_rng(9))
        result = em_gauss_mixture(y, init=[0.6, 1.0, -1.5])
        assert result.theta_hat[1] < result.theta_hat[2]

    def test_em_weibull_mixture(self):
        model = WeibullMix2()
        y = model.sample([0.35, 1.2, 2.0], 2000, np.random.default_rng(10))
        result = em_weibull_mixture(y, model, init=[0.4, 1.0, 2.2])
        np.testing.assert_allclose(result.theta_hat, [0.35, 1.2, 2.0], atol=0.25)
        assert np.all(np.diff(result.witnesses['loglik_trace']) >= -1e-6)

    def test_em_weibull_needs_positive_data(self):
        with pytest.raises(EstimatorError):
            em_weibull_mixture([-1.0, 1.0, 2.0])

    def test_gpd_by_nelder_mead(self):
        model = GPD()
        y = model.sample([0.7, 3.0], 2000, np.random.default_rng(12))
        result = mle(model, y)
        assert result.theta_hat[0] == pytest.approx(0.7, abs=0.15)
        assert result.theta_hat[1] == pytest.approx(3.0, rel=0.15)


class TestContaminationEstimator:

    def test_noise_defaults(self, rng):
        assert isinstance(default_noise_model(Gaussian()), Gaussian)
        assert isinstance(default_noise_model(WeibullMix2()), GPD)
        y = rng.normal(size=100)
        init = default_noise_init(Gaussian(), y)
        assert init[0] > 1.0
        assert init[1] >= 0.5

    def test_zero_lambda_is_classical(self, fast_opts):
        y = Gaussian().sample([0.0, 1.0], 60, np.random.default_rng(13))
        collapsed = contamination_mdphide(Gaussian(), y, HELLINGER, lambda_max=0.0, opts=fast_opts)
        classical = classical_mdphide(Gaussian(), y, HELLINGER, opts=fast_opts)
        np.testing.assert_array_equal(collapsed.theta_hat, classical.theta_hat)
        assert collapsed.method == 'contamination_mdphide'
        assert collapsed.witnesses['lambda'] == 0.0

    def test_lambda_max_range(self, rng):
        with pytest.raises(InvalidParameterError):
            contamination_mdphide(Gaussian(), rng.normal(size=20), HELLINGER, lambda_max=0.7)

    def test_inner_sup_stays_in_the_box(self, fast_opts):
        y = _contaminated(np.random.default_rng(14))
        result = contamination_inner_sup(Gaussian(), None, [0.0, 1.0], y, HELLINGER, lambda_max=0.3,
                                         opts=fast_opts)
        assert 0.0 < result.witnesses['lambda'] < 0.3
        assert np.isfinite(result.objective_value)
