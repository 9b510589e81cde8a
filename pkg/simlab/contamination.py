"""Outlier schemes applied to a clean sample before estimation."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np
from scipy import stats

from exceptions import ContaminationError


_LOGGER = logging.getLogger('simlab')


class ContaminationKind(Enum):
    NONE = 'none'
    REPLACE_LARGEST = 'replace_largest'
    REPLACE_RANDOM = 'replace_random'
    ADD_TO_LARGEST = 'add_to_largest'
    PERTURB_EXTREMES = 'perturb_extremes'
    REPLACE_RANDOM_UNIFORM_TAIL = 'replace_random_uniform_tail'


@dataclass(frozen=True)
class NoiseSpec:
    """A scipy.stats continuous distribution: shape parameters, location and scale."""
    distribution: str
    shapes: Tuple[float, ...] = ()
    loc: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if not isinstance(getattr(stats, self.distribution, None), stats.rv_continuous):
            raise ContaminationError(f"unknown noise distribution '{self.distribution}'")
        if not self.scale > 0.0:
            raise ContaminationError(f"noise scale must be positive, got {self.scale}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        dist = getattr(stats, self.distribution)
        return np.atleast_1d(dist.rvs(*self.shapes, loc=self.loc, scale=self.scale, size=n, random_state=rng))


@dataclass(frozen=True)
class ContaminationScheme:
    kind: ContaminationKind = ContaminationKind.NONE
    k: int = 0
    value: Optional[float] = None
    noise: Optional[NoiseSpec] = None
    low: Tuple[float, float] = (0.0, 0.0)
    high: Tuple[float, float] = (0.0, 0.0)
    k_low: int = 0
    upper: Optional[float] = None
    replace: bool = False

    def __post_init__(self):
        kind = self.kind
        if kind is ContaminationKind.NONE:
            return
        if kind is ContaminationKind.PERTURB_EXTREMES:
            if self.k < 0 or self.k_low < 0 or self.k + self.k_low == 0:
                raise ContaminationError("perturb_extremes needs k_low and/or k positive")
        elif self.k < 1:
            raise ContaminationError(f"{kind.value} needs k >= 1, got {self.k}")
        if kind is ContaminationKind.REPLACE_LARGEST and self.value is None:
            raise ContaminationError("replace_largest needs a replacement value")
        if kind is ContaminationKind.REPLACE_RANDOM and self.noise is None:
            raise ContaminationError("replace_random needs a noise distribution")
        if kind is ContaminationKind.REPLACE_RANDOM_UNIFORM_TAIL and self.upper is None:
            raise ContaminationError("replace_random_uniform_tail needs an upper end")
        for name, (a, b) in (('low', self.low), ('high', self.high)):
            if b < a:
                raise ContaminationError(f"{name} interval [{a}, {b}] is reversed")

    @classmethod
    def from_config(cls, options) -> 'ContaminationScheme':
        """Build from the `contamination` section of an experiment file."""
        if not options:
            return cls()
        options = dict(options)
        try:
            kind = ContaminationKind(options.pop('kind', 'none'))
        except ValueError as exc:
            raise ContaminationError(str(exc)) from None
        noise = options.pop('noise', None)
        if noise is not None:
            noise = dict(noise)
            noise = NoiseSpec(noise['distribution'], tuple(float(v) for v in noise.get('shapes', ())),
                              float(noise.get('loc', 0.0)), float(noise.get('scale', 1.0)))
        for key in ('low', 'high'):
            if key in options:
                options[key] = tuple(float(v) for v in options[key])
        try:
            return cls(kind=kind, noise=noise, **options)
        except TypeError as exc:
            raise ContaminationError(f"invalid contamination options: {exc}") from None

    @property
    def label(self) -> str:
        return self.kind.value


def _check_size(y, k):
    if k >= y.size:
        raise ContaminationError(f"cannot contaminate {k} of {y.size} observations")


def _perturb(y, index, low, high, replace, rng):
    draws = rng.uniform(low, high, size=index.size)
    y[index] = draws if replace else y[index] + draws


def apply_contamination(sample, scheme: ContaminationScheme, rng: np.random.Generator) -> np.ndarray:
    """A contaminated copy of the sample; its length never changes."""
    y = np.array(sample, dtype=float)
    kind = scheme.kind
    if kind is ContaminationKind.NONE:
        return y

    order = np.argsort(y, kind='stable')
    if kind is ContaminationKind.REPLACE_LARGEST:
        _check_size(y, scheme.k)
        y[order[-scheme.k:]] = scheme.value
    elif kind is ContaminationKind.REPLACE_RANDOM:
        _check_size(y, scheme.k)
        index = rng.choice(y.size, size=scheme.k, replace=False)
        y[index] = scheme.noise.sample(scheme.k, rng)
    elif kind is ContaminationKind.ADD_TO_LARGEST:
        _check_size(y, scheme.k)
        _perturb(y, order[-scheme.k:], *scheme.high, scheme.replace, rng)
    elif kind is ContaminationKind.PERTURB_EXTREMES:
        _check_size(y, scheme.k + scheme.k_low)
        if scheme.k_low:
            _perturb(y, order[:scheme.k_low], *scheme.low, scheme.replace, rng)
        if scheme.k:
            _perturb(y, order[-scheme.k:], *scheme.high, scheme.replace, rng)
    elif kind is ContaminationKind.REPLACE_RANDOM_UNIFORM_TAIL:
        _check_size(y, scheme.k)
        top = float(y.max())
        if scheme.upper <= top:
            raise ContaminationError(f"upper end {scheme.upper} does not exceed the sample maximum {top:g}")
        index = rng.choice(y.size, size=scheme.k, replace=False)
        y[index] = rng.uniform(top, scheme.upper, size=scheme.k)
    return y
