"""Incomplete-gamma sandwich bounds on P(X1 + ... + Xn > x) for gamma-Weibull summands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Optional, Sequence

from core.errors import DomainError, UnsupportedError
from lighttails import special
from lighttails.convolve_asymptotics import nfold_asymptote
from lighttails.distributions import GammaWeibullModel

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class GammaBoundResult:
    lower: float
    upper: float
    gamma0: float
    n: int

    def to_record(self) -> dict[str, Any]:
        return {
            "log10_lower": self.lower / _LN10,
            "log10_upper": self.upper / _LN10,
            "gamma0": self.gamma0,
            "n": self.n,
        }


@dataclass(frozen=True)
class BoundQuality:
    log_ratio: float
    polynomial_degree: float
    closed_form_log_ratio: Optional[float] = None


def upper_incomplete_gamma_reg(a: float, x: float) -> float:
    """Q(a, x) = Gamma(a, x) / Gamma(a)."""
    return special.gamma_q(a, x)


def log_upper_incomplete_gamma_reg(a: float, x: float) -> float:
    return special.log_gamma_q(a, x)


def lower_incomplete_gamma_reg(a: float, x: float) -> float:
    """P(a, x) = 1 - Q(a, x)."""
    return special.gamma_p(a, x)


def sum_tail_bounds(
    gammas: Sequence[float], k: float, beta: float, x: float
) -> GammaBoundResult:
    """Log bounds Q(g0/beta, k x^beta) <= P(S_n > x) <= Q(g0/beta, k x^beta / n^(beta-1))."""
    if beta < 1.0:
        raise UnsupportedError("the p-norm sandwich needs beta >= 1")
    if not gammas:
        raise DomainError("sum_tail_bounds needs at least one summand")
    if any(g <= 0.0 for g in gammas):
        raise DomainError(f"every gamma_i must be positive, got {list(gammas)!r}")
    if k <= 0.0:
        raise DomainError(f"k must be positive, got {k!r}")
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    n = len(gammas)
    gamma0 = float(sum(gammas))
    a = gamma0 / beta
    u = k * x**beta
    lower = special.log_gamma_q(a, u)
    upper = lower if beta == 1.0 or n == 1 else special.log_gamma_q(a, u / n ** (beta - 1.0))
    return GammaBoundResult(lower=lower, upper=upper, gamma0=gamma0, n=n)


def simple_lower_bound_gamma(a: float, x: float) -> float:
    """log of x**(a-1) e**-x (a >= 1), times x / (x + 1 - a) when 0 < a < 1.

    Bounds the unregularized Gamma(a, x) from below.
    """
    if a <= 0.0:
        raise DomainError(f"a must be positive, got {a!r}")
    if x <= 0.0:
        raise DomainError(f"x must be positive, got {x!r}")
    value = (a - 1.0) * math.log(x) - x
    if a < 1.0:
        value += math.log(x / (x + 1.0 - a))
    return value


def upper_bound_asymptote(model: GammaWeibullModel, n: int, x: float) -> float:
    """log of Gamma(g/b)^n / Gamma(n g/b) n^(n g/b - 1) k^(n-1) (x/n)^(b(n-1)) F(x/n)^n."""
    a = model.shape
    return (
        n * math.lgamma(a)
        - math.lgamma(n * a)
        + (n * a - 1.0) * math.log(n)
        + (n - 1) * math.log(model.k)
        + model.beta * (n - 1) * math.log(x / n)
        + n * model.log_tail(x / n)
    )


def _closed_form_ratio(model: GammaWeibullModel, n: int, x: float) -> float:
    beta = model.beta
    return (
        (n - 0.5) * math.log(n)
        - math.lgamma(n)
        + 0.5 * (n - 1) * math.log((beta - 1.0) / (2.0 * math.pi * beta))
        + 0.5 * (n - 1) * math.log(model.k)
        + 0.5 * beta * (n - 1) * math.log(x / n)
    )


def upper_bound_quality(model: GammaWeibullModel, n: int, x: float) -> BoundQuality:
    """Log ratio of the upper bound to the n-fold asymptote; it grows like x**degree."""
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if n == 1 or model.beta == 1.0:
        return BoundQuality(log_ratio=0.0, polynomial_degree=0.0, closed_form_log_ratio=0.0)
    bounds = sum_tail_bounds([model.gamma_shape] * n, model.k, model.beta, x)
    asymptote = nfold_asymptote(model.as_weibull_like(), n)
    closed = _closed_form_ratio(model, n, x) if model.is_vanilla else None
    return BoundQuality(
        log_ratio=bounds.upper - asymptote.log_eval(x),
        polynomial_degree=model.beta * (n - 1) / 2.0,
        closed_form_log_ratio=closed,
    )
