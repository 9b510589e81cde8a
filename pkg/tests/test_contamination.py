"""Outlier schemes applied to clean samples."""

import numpy as np
import pytest

from contamination import ContaminationKind, ContaminationScheme, NoiseSpec, apply_contamination
from exceptions import ContaminationError


class TestSchemes:

    def test_none_copies(self, rng):
        y = rng.normal(size=20)
        out = apply_contamination(y, ContaminationScheme(), rng)
        np.testing.assert_array_equal(out, y)
        assert out is not y

    def test_replace_largest(self, rng):
        y = rng.normal(size=100)
        scheme = ContaminationScheme(ContaminationKind.REPLACE_LARGEST, k=10, value=10.0)
        out = apply_contamination(y, scheme, rng)
        assert out.size == 100
        assert np.sum(out == 10.0) == 10
        # the replaced points are the ten largest of the clean sample
        np.testing.assert_array_equal(np.sort(out)[:90], np.sort(y)[:90])

    def test_replace_random(self, rng):
        y = rng.normal(size=100)
        scheme = ContaminationScheme(ContaminationKind.REPLACE_RANDOM, k=5,
                                     noise=NoiseSpec('genpareto', (1.0,), 500.0, 10.0))
        out = apply_contamination(y, scheme, rng)
        assert np.sum(out >= 500.0) == 5
        assert np.sum(out != y) == 5

    def test_add_to_largest(self, rng):
        y = rng.normal(size=50)
        scheme = ContaminationScheme(ContaminationKind.ADD_TO_LARGEST, k=5, high=(2.0, 10.0))
        out = apply_contamination(y, scheme, rng)
        top = np.argsort(y)[-5:]
        shift = out[top] - y[top]
        assert np.all((shift >= 2.0) & (shift <= 10.0))
        np.testing.assert_array_equal(np.delete(out, top), np.delete(y, top))

    def test_add_to_largest_replace_toggle(self, rng):
        y = rng.normal(size=50)
        scheme = ContaminationScheme(ContaminationKind.ADD_TO_LARGEST, k=5, high=(2.0, 10.0), replace=True)
        out = apply_contamination(y, scheme, rng)
        top = np.argsort(y)[-5:]
        assert np.all((out[top] >= 2.0) & (out[top] <= 10.0))

    def test_perturb_extremes(self, rng):
        y = rng.normal(size=100)
        scheme = ContaminationScheme(ContaminationKind.PERTURB_EXTREMES, k=5, k_low=5, low=(-5.0, -2.0),
                                     high=(2.0, 5.0))
        out = apply_contamination(y, scheme, rng)
        order = np.argsort(y)
        assert np.all(out[order[:5]] - y[order[:5]] <= -2.0)
        assert np.all(out[order[-5:]] - y[order[-5:]] >= 2.0)
        np.testing.assert_array_equal(out[order[5:-5]], y[order[5:-5]])

    def test_uniform_tail(self, rng):
        y = rng.weibull(1.5, size=100)
        scheme = ContaminationScheme(ContaminationKind.REPLACE_RANDOM_UNIFORM_TAIL, k=10, upper=75.0)
        out = apply_contamination(y, scheme, rng)
        changed = out != y
        assert changed.sum() == 10
        assert np.all((out[changed] >= y.max()) & (out[changed] <= 75.0))

    def test_uniform_tail_needs_room(self, rng):
        scheme = ContaminationScheme(ContaminationKind.REPLACE_RANDOM_UNIFORM_TAIL, k=1, upper=0.5)
        with pytest.raises(ContaminationError):
            apply_contamination(np.array([0.1, 0.2, 1.0]), scheme, rng)

    def test_too_many_outliers(self, rng):
        scheme = ContaminationScheme(ContaminationKind.REPLACE_LARGEST, k=5, value=1.0)
        with pytest.raises(ContaminationError):
            apply_contamination(np.zeros(5), scheme, rng)

    def test_deterministic_given_the_generator(self):
        y = np.linspace(0.0, 1.0, 30)
        scheme = ContaminationScheme(ContaminationKind.REPLACE_RANDOM, k=3, noise=NoiseSpec('norm', (), 10.0, 1.0))
        a = apply_contamination(y, scheme, np.random.default_rng(3))
        b = apply_contamination(y, scheme, np.random.default_rng(3))
        np.testing.assert_array_equal(a, b)


class TestValidation:

    @pytest.mark.parametrize("kwargs", [
        {'kind': ContaminationKind.REPLACE_LARGEST, 'k': 3},
        {'kind': ContaminationKind.REPLACE_LARGEST, 'k': 0, 'value': 1.0},
        {'kind': ContaminationKind.REPLACE_RANDOM, 'k': 3},
        {'kind': ContaminationKind.REPLACE_RANDOM_UNIFORM_TAIL, 'k': 3},
        {'kind': ContaminationKind.PERTURB_EXTREMES},
        {'kind': ContaminationKind.ADD_TO_LARGEST, 'k': 2, 'high': (5.0, 1.0)},
    ])
    def test_rejects(self, kwargs):
        with pytest.raises(ContaminationError):
            ContaminationScheme(**kwargs)

    def test_unknown_noise(self):
        with pytest.raises(ContaminationError):
            NoiseSpec('not_a_distribution')
        with pytest.raises(ContaminationError):
            NoiseSpec('norm', scale=0.0)


class TestFromConfig:

    def test_empty(self):
        assert ContaminationScheme.from_config(None).kind is ContaminationKind.NONE

    def test_full(self):
        scheme = ContaminationScheme.from_config({
            'kind': 'replace_random', 'k': 10,
            'noise': {'distribution': 'weibull_min', 'shapes': [0.9], 'scale': 3},
        })
        assert scheme.kind is ContaminationKind.REPLACE_RANDOM
        assert scheme.noise == NoiseSpec('weibull_min', (0.9,), 0.0, 3.0)
        assert scheme.label == 'replace_random'

    def test_intervals_become_tuples(self):
        scheme = ContaminationScheme.from_config({'kind': 'perturb_extremes', 'k': 5, 'k_low': 5,
                                                  'low': [-5, -2], 'high': [2, 5]})
        assert scheme.low == (-5.0, -2.0)
        assert scheme.high == (2.0, 5.0)

    def test_unknown_kind(self):
        with pytest.raises(ContaminationError):
            ContaminationScheme.from_config({'kind': 'swap'})

    def test_unknown_option(self):
        with pytest.raises(ContaminationError):
            ContaminationScheme.from_config({'kind': 'replace_largest', 'k': 1, 'value': 1.0, 'colour': 'red'})
