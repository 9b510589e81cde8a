"""Bounded Nelder-Mead with restarts and the nested inf-sup driver."""

import numpy as np
import pytest

from exceptions import FitStatus, InvalidParameterError, OptimizationError, SimlabError
from optimize import OptimOptions, from_unconstrained, nelder_mead, nested_infsup, to_unconstrained


BOX = (np.array([-5.0, -5.0]), np.array([5.0, 5.0]))


class TestReparameterization:

    def test_round_trip(self):
        theta = np.array([-4.9, 3.3])
        np.testing.assert_allclose(from_unconstrained(to_unconstrained(theta, BOX), BOX), theta, rtol=1e-12)

    def test_midpoint_maps_to_zero(self):
        np.testing.assert_allclose(to_unconstrained([0.0, 0.0], BOX), [0.0, 0.0], atol=1e-15)

    def test_rejects_points_on_the_boundary(self):
        with pytest.raises(InvalidParameterError):
            to_unconstrained([5.0, 0.0], BOX)

    def test_rejects_empty_box(self):
        with pytest.raises(InvalidParameterError):
            to_unconstrained([0.0], ([1.0], [1.0]))

    def test_extreme_values_stay_inside(self):
        x = from_unconstrained([1e6, -1e6], BOX)
        assert np.all(x > BOX[0]) and np.all(x < BOX[1])


class TestOptions:

    def test_inner_tightens(self):
        inner = OptimOptions(f_tol=1e-6, restarts=3).inner()
        assert inner.f_tol == pytest.approx(1e-7)
        assert inner.restarts == 1

    def test_rejects_bad_values(self):
        with pytest.raises(ValueError):
            OptimOptions(x_tol=0.0)
        with pytest.raises(ValueError):
            OptimOptions(restarts=-1)

    def test_from_options(self):
        assert OptimOptions.from_options({'max_iters': 50}).max_iters == 50
        assert OptimOptions.from_options(None) == OptimOptions()


class TestNelderMead:

    def test_quadratic_in_box(self):
        result = nelder_mead(lambda x: (x[0] - 1.0) ** 2 + 2.0 * (x[1] + 2.0) ** 2, [0.0, 0.0], BOX)
        np.testing.assert_allclose(result.x, [1.0, -2.0], atol=1e-3)
        assert result.status is FitStatus.CONVERGED
        assert result.nfev > 0

    def test_unbounded(self):
        result = nelder_mead(lambda x: np.sum((x - 3.0) ** 2), [0.0, 0.0, 0.0])
        np.testing.assert_allclose(result.x, [3.0, 3.0, 3.0], atol=1e-3)

    def test_rosenbrock(self):
        def rosenbrock(x):
            return (1.0 - x[0]) ** 2 + 100.0 * (x[1] - x[0] ** 2) ** 2

        result = nelder_mead(rosenbrock, [-1.2, 1.0], BOX, OptimOptions(max_iters=5000, restarts=3))
        np.testing.assert_allclose(result.x, [1.0, 1.0], atol=1e-2)

    def test_minimum_on_the_boundary_stays_inside(self):
        result = nelder_mead(lambda x: x[0] + x[1], [0.0, 0.0], BOX)
        assert np.all(result.x > BOX[0])
        assert result.x[0] < -4.9

    def test_max_iters(self):
        result = nelder_mead(lambda x: np.sum(x * x), [3.0, 3.0], BOX, OptimOptions(max_iters=3, restarts=0))
        assert result.status is FitStatus.MAX_ITERS

    def test_non_finite_start(self):
        with pytest.raises(OptimizationError):
            nelder_mead(lambda x: np.inf, [0.0, 0.0], BOX)

    def test_failures_score_as_infinite(self):
        calls = {'n': 0}

        def objective(x):
            calls['n'] += 1
            if calls['n'] == 2:
                raise SimlabError("quadrature failed at this point")
            return (x[0] - 2.0) ** 2 + x[1] ** 2

        result = nelder_mead(objective, [0.0, 0.0], BOX)
        np.testing.assert_allclose(result.x, [2.0, 0.0], atol=1e-3)
        assert result.status is not FitStatus.ABORTED

    def test_mostly_non_finite_aborts(self):
        calls = {'n': 0}

        def objective(x):
            calls['n'] += 1
            return 1.0 if calls['n'] == 1 else np.nan

        result = nelder_mead(objective, [0.0, 0.0], BOX)
        assert result.status is FitStatus.ABORTED
        np.testing.assert_allclose(result.x, [0.0, 0.0], atol=1e-12)


class TestNestedInfSup:

    def test_saddle(self):
        # f(phi, alpha) = (phi - 1)^2 - (alpha - phi)^2: the sup over alpha is at alpha = phi
        def objective(phi, alpha):
            return (phi[0] - 1.0) ** 2 - (alpha[0] - phi[0]) ** 2

        box = ([-5.0], [5.0])
        result = nested_infsup(objective, [0.0], [0.5], box, box, OptimOptions(max_iters=400))
        assert result.phi[0] == pytest.approx(1.0, abs=1e-2)
        assert result.alpha[0] == pytest.approx(1.0, abs=5e-2)
        assert result.value == pytest.approx(0.0, abs=1e-3)
        assert result.inner_failures == 0
        assert result.status in (FitStatus.CONVERGED, FitStatus.MAX_ITERS)

    def test_inner_failure_reported(self):
        def objective(phi, alpha):
            if phi[0] > 0.5:
                return np.inf
            return (phi[0] - 1.0) ** 2 - (alpha[0] - phi[0]) ** 2

        box = ([-5.0], [5.0])
        result = nested_infsup(objective, [0.0], [0.0], box, box, OptimOptions(max_iters=200))
        assert result.inner_failures > 0
        assert result.status in (FitStatus.INNER_FAILURE, FitStatus.MAX_ITERS, FitStatus.ABORTED)
        assert result.phi[0] <= 0.5
