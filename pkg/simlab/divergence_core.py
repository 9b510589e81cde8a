"""Convex functions defining the divergence family and their derived functions.

Two kinds are supported: the Cressie-Read power family

    phi_g(t) = (t**g - g*t + g - 1) / (g*(g - 1)),   g not in {0, 1}

and the modified Kullback-Leibler function phi(t) = -log(t) + t - 1, which keeps
the maximum likelihood estimator inside the kernel-based estimator class.

Every function accepts scalars or numpy arrays.  The *_log helpers take log
densities instead of ratios; the estimators only use those, so density ratios
are never formed by pointwise division.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from exceptions import DivergenceDomainError


ArrayLike = Union[float, np.ndarray]


class DivergenceKind(Enum):
    CRESSIE_READ = 'cressie_read'
    MODIFIED_KL = 'modified_kl'


@dataclass(frozen=True)
class DivergenceSpec:
    """Selects the convex function phi."""
    kind: DivergenceKind
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind is DivergenceKind.CRESSIE_READ:
            if self.gamma is None or not np.isfinite(self.gamma):
                raise DivergenceDomainError("Cressie-Read divergence needs a finite gamma")
            if self.gamma in (0.0, 1.0):
                raise DivergenceDomainError(f"gamma={self.gamma} is not in the Cressie-Read family")
            object.__setattr__(self, 'gamma', float(self.gamma))
        elif self.gamma is not None:
            raise DivergenceDomainError("modified KL divergence takes no gamma")

    @classmethod
    def cressie_read(cls, gamma: float) -> 'DivergenceSpec':
        return cls(DivergenceKind.CRESSIE_READ, gamma)

    @classmethod
    def hellinger(cls) -> 'DivergenceSpec':
        return cls(DivergenceKind.CRESSIE_READ, 0.5)

    @classmethod
    def modified_kl(cls) -> 'DivergenceSpec':
        return cls(DivergenceKind.MODIFIED_KL)

    @classmethod
    def parse(cls, value) -> 'DivergenceSpec':
        """Build a spec from a configuration value: 'hellinger', 'modified_kl', 'chi2', 'neyman' or a gamma."""
        if isinstance(value, DivergenceSpec):
            return value
        if isinstance(value, str):
            named = value.strip().lower()
            if named == 'hellinger':
                return cls.hellinger()
            if named in ('modified_kl', 'mkl', 'kl_m'):
                return cls.modified_kl()
            if named in ('chi2', 'pearson'):
                return cls.cressie_read(2.0)
            if named == 'neyman':
                return cls.cressie_read(-1.0)
            try:
                return cls.cressie_read(float(named))
            except ValueError:
                raise DivergenceDomainError(f"unknown divergence '{value}'") from None
        return cls.cressie_read(float(value))

    @property
    def label(self) -> str:
        if self.kind is DivergenceKind.MODIFIED_KL:
            return 'modified_kl'
        return f"cressie_read({self.gamma:g})"


def _as_array(t):
    return np.asarray(t, dtype=float)


def _result(value, like):
    return float(value) if np.ndim(like) == 0 else value


def _check_positive(t, allow_zero=False):
    bad = (t < 0.0) if allow_zero else (t <= 0.0)
    if np.any(bad) or np.any(np.isnan(t)):
        raise DivergenceDomainError(f"argument out of domain: {t[bad] if np.ndim(t) else t}")


def phi(spec: DivergenceSpec, t: ArrayLike) -> ArrayLike:
    """phi(t); t = 0 resolves to its limit (1/gamma for gamma > 0, +inf otherwise)."""
    x = _as_array(t)
    _check_positive(x, allow_zero=True)
    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        log_x = np.log(x)
        value = phi_log(spec, log_x)
    return _result(value, t)


def phi_prime(spec: DivergenceSpec, t: ArrayLike) -> ArrayLike:
    x = _as_array(t)
    _check_positive(x)
    return _result(phi_prime_log(spec, np.log(x)), t)


def phi_sharp(spec: DivergenceSpec, t: ArrayLike) -> ArrayLike:
    """phi#(t) = t phi'(t) - phi(t)."""
    x = _as_array(t)
    _check_positive(x)
    return _result(phi_sharp_log(spec, np.log(x)), t)


def phi_second(spec: DivergenceSpec, t: ArrayLike) -> ArrayLike:
    x = _as_array(t)
    _check_positive(x)
    with np.errstate(over='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = np.exp(-2.0 * np.log(x))
        else:
            value = np.exp((spec.gamma - 2.0) * np.log(x))
    return _result(value, t)


def phi_log(spec: DivergenceSpec, log_t: ArrayLike) -> ArrayLike:
    """phi(exp(log_t))."""
    lt = _as_array(log_t)
    with np.errstate(over='ignore', invalid='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = np.expm1(lt) - lt
        else:
            g = spec.gamma
            # expm1 keeps phi(1) == 0 exactly and is accurate near t = 1
            value = (np.expm1(g * lt) - g * np.expm1(lt)) / (g * (g - 1.0))
            if g < 0.0:
                value = np.where(np.isneginf(lt), np.inf, value)
            else:
                value = np.where(np.isneginf(lt), 1.0 / g, value)
    return _result(value, log_t)


def phi_prime_log(spec: DivergenceSpec, log_t: ArrayLike) -> ArrayLike:
    """phi'(exp(log_t))."""
    lt = _as_array(log_t)
    with np.errstate(over='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = -np.expm1(-lt)
        else:
            g = spec.gamma
            value = np.expm1((g - 1.0) * lt) / (g - 1.0)
    return _result(value, log_t)


def phi_sharp_log(spec: DivergenceSpec, log_t: ArrayLike) -> ArrayLike:
    """phi#(exp(log_t)): (t**g - 1)/g, or log t for the modified KL case."""
    lt = _as_array(log_t)
    with np.errstate(over='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = lt.copy() if np.ndim(lt) else lt
        else:
            g = spec.gamma
            value = np.expm1(g * lt) / g
    return _result(value, log_t)


def weighted_phi_prime(spec: DivergenceSpec, log_p: ArrayLike, log_q: ArrayLike) -> ArrayLike:
    """p * phi'(p/q) from log densities.

    The Cressie-Read form vanishes wherever p does, whatever q is, so integrands stay
    finite in the tails where both densities underflow; the modified KL form is p - q.
    """
    lp = _as_array(log_p)
    lq = _as_array(log_q)
    with np.errstate(over='ignore', invalid='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = np.exp(lp) - np.exp(lq)
        else:
            g = spec.gamma
            cross = np.exp(g * lp + (1.0 - g) * lq)
            value = (cross - np.exp(lp)) / (g - 1.0)
            value = np.where(np.isneginf(lp), 0.0, value)
    return _result(value, log_p)


def weighted_phi(spec: DivergenceSpec, log_p: ArrayLike, log_q: ArrayLike) -> ArrayLike:
    """q * phi(p/q) from log densities."""
    lp = _as_array(log_p)
    lq = _as_array(log_q)
    with np.errstate(over='ignore', invalid='ignore'):
        p = np.exp(lp)
        q = np.exp(lq)
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = q * (lq - lp) + p - q
            value = np.where(np.isneginf(lq), p, value)
        else:
            g = spec.gamma
            cross = np.exp(g * lp + (1.0 - g) * lq)
            value = (cross - g * p + (g - 1.0) * q) / (g * (g - 1.0))
    return _result(value, log_p)


def cross_power(spec: DivergenceSpec, log_p: ArrayLike, log_q: ArrayLike) -> ArrayLike:
    """The part of q*phi(p/q) that does not integrate to a constant.

    For two probability densities D(p, q) = integral of cross_power + cross_constant.
    Cressie-Read: p**g q**(1-g) / (g(g-1)); modified KL: q log(q/p).
    """
    lp = _as_array(log_p)
    lq = _as_array(log_q)
    with np.errstate(over='ignore', invalid='ignore'):
        if spec.kind is DivergenceKind.MODIFIED_KL:
            value = np.exp(lq) * (lq - lp)
            value = np.where(np.isneginf(lq), 0.0, value)
        else:
            g = spec.gamma
            value = np.exp(g * lp + (1.0 - g) * lq) / (g * (g - 1.0))
    return _result(value, log_p)


def cross_constant(spec: DivergenceSpec) -> float:
    if spec.kind is DivergenceKind.MODIFIED_KL:
        return 0.0
    g = spec.gamma
    return -1.0 / (g * (g - 1.0))
