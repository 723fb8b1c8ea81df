"""Special functions evaluated in log space.

The regularized incomplete gamma functions use the power series below ``a + 1``
and a modified-Lentz continued fraction above it, so that tails far below the
double-precision floor stay representable through their logarithm.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as sc

from core.errors import AccuracyError, DomainError

MAX_TERMS = 10_000
SERIES_TOL = 1e-15
_TINY = 1e-300
_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_args(a: float, x: float) -> None:
    if not math.isfinite(a) or a <= 0.0:
        raise DomainError(f"incomplete gamma needs a > 0, got a={a!r}")
    if math.isnan(x) or x < 0.0:
        raise DomainError(f"incomplete gamma needs x >= 0, got x={x!r}")


def _log_prefactor(a: float, x: float) -> float:
    return a * math.log(x) - x - math.lgamma(a)


def _log_series_p(a: float, x: float) -> float:
    """log P(a, x) from the series sum x^n / ((a+1)...(a+n))."""
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(MAX_TERMS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * SERIES_TOL:
            return _log_prefactor(a, x) + math.log(total)
    raise AccuracyError(
        "incomplete gamma series did not converge",
        best_estimate=_log_prefactor(a, x) + math.log(total),
        achieved_tol=abs(term / total),
    )


def _log_cf_q(a: float, x: float) -> float:
    """log Q(a, x) from the continued fraction, modified Lentz iteration."""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    delta = 0.0
    for i in range(1, MAX_TERMS + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < SERIES_TOL:
            return _log_prefactor(a, x) + math.log(h)
    raise AccuracyError(
        "incomplete gamma continued fraction did not converge",
        best_estimate=_log_prefactor(a, x) + math.log(h),
        achieved_tol=abs(delta - 1.0),
    )


def log_gamma_q(a: float, x: float) -> float:
    """Logarithm of the regularized upper incomplete gamma function Q(a, x)."""
    _check_args(a, x)
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return -math.inf
    if x < a + 1.0:
        log_p = _log_series_p(a, x)
        return math.log1p(-math.exp(log_p)) if log_p < -1e-300 else -math.inf
    return _log_cf_q(a, x)


def log_gamma_p(a: float, x: float) -> float:
    """Logarithm of the regularized lower incomplete gamma function P(a, x)."""
    _check_args(a, x)
    if x == 0.0:
        return -math.inf
    if math.isinf(x):
        return 0.0
    if x < a + 1.0:
        return _log_series_p(a, x)
    return math.log1p(-math.exp(_log_cf_q(a, x)))


def gamma_q(a: float, x: float) -> float:
    return math.exp(log_gamma_q(a, x))


def gamma_p(a: float, x: float) -> float:
    return math.exp(log_gamma_p(a, x))


def log_gamma_q_array(a: float, xs: np.ndarray) -> np.ndarray:
    """Vectorised log Q(a, x) for non-negative ``xs``.

    scipy's ``gammaincc`` covers the bulk; entries that underflow to zero fall
    back to the log-space routine above.
    """
    xs = np.asarray(xs, dtype=float)
    if a == 1.0:
        return -xs
    with np.errstate(divide="ignore"):
        out = np.log(sc.gammaincc(a, xs))
    underflow = ~np.isfinite(out) & np.isfinite(xs)
    if np.any(underflow):
        out[underflow] = [log_gamma_q(a, float(v)) for v in xs[underflow]]
    return out


def log_mills_b0(ell: float) -> float:
    """log of ell * exp(ell**2 / 2) * (1 - Phi(ell)).

    Above ``ell = 8`` the three-term asymptotic Mills series is used; below it the
    complementary normal CDF comes from ``scipy.special.log_ndtr``.
    """
    if math.isnan(ell) or ell <= 0.0:
        raise DomainError(f"B0 needs ell > 0, got {ell!r}")
    if ell > 8.0:
        inv = 1.0 / (ell * ell)
        return math.log(1.0 - inv + 3.0 * inv * inv) - math.log(_SQRT_2PI)
    return math.log(ell) + 0.5 * ell * ell + float(sc.log_ndtr(-ell))
