"""Special functions needed by the closed-form transition laws.

Only the two Gauss-hypergeometric parameter patterns that actually occur are
supported:

* ``2F1(-a, -a; 1-a; x)`` with ``a in (0, 1)`` -- the primitive of the
  power-kernel integral behind the transition log-characteristic function,
* ``2F1(1, 1; 1-a; x)`` -- its Euler/9.131.1 transform.

Arguments span many orders of magnitude (down to ``x ~ -1e12`` on pricing
grids), so evaluation is split by region: the Gauss power series inside
``|x| <= 0.5``, a Pfaff-transformed series on moderate negative arguments and
a logarithmic large-argument expansion beyond that.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import digamma, kv

__all__ = ["gauss_2f1", "bessel_k", "log_gamma"]

_SERIES_SPLIT = 0.5     # |x| below which the plain Gauss series is used
_ASYMPTOTIC_SPLIT = 50.0    # -x above which the log expansion takes over
_MAX_TERMS = 200_000
_EPS = 1e-17


class SpecialFunctionDomainError(ValueError):
    """Raised for arguments outside the supported parameter patterns."""


def binom_alpha(alpha: float, kmax: int) -> np.ndarray:
    """Binomial coefficients binom(alpha, k) for k = 0..kmax."""
    out = np.empty(kmax + 1)
    out[0] = 1.0
    for k in range(1, kmax + 1):
        out[k] = out[k - 1] * (alpha - (k - 1)) / k
    return out


def log_gamma(x: float) -> float:
    """log Gamma(x) for x > 0."""
    if x <= 0.0:
        raise SpecialFunctionDomainError(f"log_gamma requires x > 0, got {x}")
    return math.lgamma(x)


def bessel_k(order: float, x: float) -> float:
    """Modified Bessel function of the second kind K_order(x), x > 0."""
    if x <= 0.0:
        raise SpecialFunctionDomainError(f"bessel_k requires x > 0, got {x}")
    return float(kv(order, x))


def _gauss_series_aa(alpha: float, x: float) -> float:
    # 2F1(-a,-a;1-a;x), plain series; converges for |x| < 1
    term = 1.0
    total = 1.0
    for k in range(_MAX_TERMS):
        term *= (k - alpha) * (k - alpha) / ((k + 1.0) * (k + 1.0 - alpha)) * x
        total += term
        if abs(term) <= _EPS * abs(total):
            return total
    raise SpecialFunctionDomainError(
        f"2F1(-a,-a;1-a;x) series did not converge for x={x}")


def _gauss_series_11(alpha: float, x: float) -> float:
    # 2F1(1,1;1-a;x), plain series; converges for |x| < 1
    term = 1.0
    total = 1.0
    for k in range(_MAX_TERMS):
        term *= (k + 1.0) / (k + 1.0 - alpha) * x
        total += term
        if abs(term) <= _EPS * abs(total):
            return total
    raise SpecialFunctionDomainError(
        f"2F1(1,1;1-a;x) series did not converge for x={x}")


def _pfaff_factor(alpha: float, w: float) -> float:
    # 2F1(1,-a;1-a;w) = 1 - a * sum_{k>=1} w^k/(k-a); the common core of the
    # Pfaff transforms of both supported patterns.
    total = 0.0
    wk = 1.0
    for k in range(1, _MAX_TERMS):
        wk *= w
        t = wk / (k - alpha)
        total += t
        if t <= _EPS * (1.0 + abs(total)):
            return 1.0 - alpha * total
    raise SpecialFunctionDomainError(
        f"Pfaff series did not converge for w={w}")


def asymptotic_constant(alpha: float) -> float:
    """Constant K(a) in 2F1(-a,-a;1-a;-y) ~ -a y^a (log y + K(a)) as y -> inf."""
    return -np.euler_gamma - float(digamma(1.0 - alpha)) - 1.0 / alpha


def binomial_log_tail(alpha: float, y: float, coeffs: np.ndarray | None = None) -> float:
    """Tail sum h(y) = sum_{k>=1} binom(a,k)/k y^-k of the large-y expansion."""
    if coeffs is None:
        coeffs = binom_alpha(alpha, 80)
    total = 0.0
    yk = 1.0
    for k in range(1, len(coeffs)):
        yk /= y
        t = coeffs[k] / k * yk
        total += t
        if abs(t) <= _EPS * (1.0 + abs(total)):
            break
    return total


def _f_aa_asymptotic(alpha: float, y: float) -> float:
    # 2F1(-a,-a;1-a;-y) for large y > 0
    return -alpha * y ** alpha * (
        math.log(y) + asymptotic_constant(alpha) - binomial_log_tail(alpha, y))


def _gauss_2f1_aa(alpha: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if x == 1.0:
        # Gauss summation; c - a - b = 1 + a > 0 so the series converges
        return math.exp(math.lgamma(1.0 - alpha) + math.lgamma(1.0 + alpha))
    if abs(x) <= _SERIES_SPLIT or x > 0.0:
        return _gauss_series_aa(alpha, x)
    y = -x
    if y <= _ASYMPTOTIC_SPLIT:
        # Pfaff map w = x/(x-1); equals the 9.131.1 route analytically
        return (1.0 + y) ** alpha * _pfaff_factor(alpha, y / (1.0 + y))
    return _f_aa_asymptotic(alpha, y)


def _gauss_2f1_11(alpha: float, x: float) -> float:
    if x == 0.0:
        return 1.0
    if x >= 1.0:
        raise SpecialFunctionDomainError(
            f"2F1(1,1;1-a;x) diverges at x={x} >= 1")
    if abs(x) <= _SERIES_SPLIT or x > 0.0:
        return _gauss_series_11(alpha, x)
    y = -x
    if y <= _ASYMPTOTIC_SPLIT:
        return _pfaff_factor(alpha, y / (1.0 + y)) / (1.0 + y)
    # 9.131.1: 2F1(1,1;1-a;x) = (1-x)^(-1-a) 2F1(-a,-a;1-a;x)
    return (1.0 + y) ** (-1.0 - alpha) * _f_aa_asymptotic(alpha, y)


def gauss_2f1(a: float, b: float, c: float, x: float) -> float:
    """Gauss hypergeometric 2F1(a, b; c; x) on the supported patterns.

    Supported: (a, b, c) = (-alpha, -alpha, 1-alpha) for x <= 1 and
    (1, 1, 1-alpha) for x < 1, with alpha in (0, 1). Accurate to ~1e-12
    relative over x in [-1e12, 0.95].
    """
    if not all(map(math.isfinite, (a, b, c, x))):
        raise SpecialFunctionDomainError("non-finite 2F1 argument")
    if c <= 0.0 and c == math.floor(c):
        raise SpecialFunctionDomainError(f"2F1 pole: c={c} is a nonpositive integer")
    if x > 1.0:
        raise SpecialFunctionDomainError(f"2F1 argument x={x} > 1 unsupported")
    if a == b and abs(c - (1.0 + a)) < 1e-14 and -1.0 < a < 0.0:
        return _gauss_2f1_aa(-a, x)
    if a == 1.0 and b == 1.0 and 0.0 < c < 1.0:
        return _gauss_2f1_11(1.0 - c, x)
    raise SpecialFunctionDomainError(
        f"unsupported 2F1 parameter pattern (a={a}, b={b}, c={c})")
