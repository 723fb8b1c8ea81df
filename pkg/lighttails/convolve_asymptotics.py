"""Tail asymptotics of convolutions of light-tailed laws.

Same-beta Weibull-like pairs have closed-form constants; iterating them gives the
n-fold formulas. Pairs from the general class are handled by solving the saddle
split lambda1(q1) = lambda2(q2), q1 + q2 = x numerically. The exponential class
(beta = 1) has its own product formula.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence, Union, cast

from scipy.optimize import brentq

from core.errors import DomainError, NoSolutionError, UnsupportedError
from lighttails import special
from lighttails.distributions import BkrModel, GammaWeibullModel, WeibullLikeModel

logger = logging.getLogger(__name__)

SlowlyVarying = Callable[[float], float]
ExpClassTerm = tuple[SlowlyVarying, float]

SPLIT_RTOL = 1e-12
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class PairAsymConstants:
    eta: float
    theta1: float
    theta2: float
    kappa: float
    c: float
    sigma1_sq: float
    sigma2_sq: float
    sigma_sq: float
    log_k: float
    gamma_exp: float

    @property
    def k(self) -> float:
        return math.exp(self.log_k)


@dataclass(frozen=True)
class TailAsymptote:
    """k * x**p * exp(-c * x**beta), with k held as log k."""

    log_k: float
    p: float
    c: float
    beta: float

    def __post_init__(self) -> None:
        if self.c <= 0.0:
            raise DomainError(f"asymptote rate c must be positive, got {self.c!r}")
        if self.beta <= 1.0:
            raise DomainError(f"asymptote exponent beta must exceed 1, got {self.beta!r}")

    @property
    def k(self) -> float:
        return math.exp(self.log_k)

    def log_eval(self, x: float) -> float:
        if not math.isfinite(x) or x <= 0.0:
            raise DomainError(f"asymptote is evaluated at x > 0, got {x!r}")
        return self.log_k + self.p * math.log(x) - self.c * x**self.beta

    def __call__(self, x: float) -> float:
        return math.exp(self.log_eval(x))

    def density(self) -> "TailAsymptote":
        """Matching density asymptote beta*c*k * x**(p+beta-1) * exp(-c x**beta)."""
        return TailAsymptote(
            log_k=self.log_k + math.log(self.beta * self.c),
            p=self.p + self.beta - 1.0,
            c=self.c,
            beta=self.beta,
        )

    def as_model(self) -> WeibullLikeModel:
        """Weibull-like law whose tail asymptote is this one."""
        return WeibullLikeModel(
            alpha=self.p,
            beta=self.beta,
            c=self.c,
            d=self.beta * self.c * self.k,
        )

    def to_record(self) -> dict[str, Any]:
        return {"log_k": self.log_k, "p": self.p, "c": self.c, "beta": self.beta}


@dataclass(frozen=True)
class SplitSolution:
    q1: float
    q2: float
    lambda_at_split: float
    psi_sum: float
    gamma_out: float
    lambda_slope: float
    residual: float

    def to_record(self) -> dict[str, Any]:
        return {
            "q1": self.q1,
            "q2": self.q2,
            "lambda": self.lambda_at_split,
            "psi": self.psi_sum,
            "residual": self.residual,
        }


def _check_same_beta(m1: WeibullLikeModel, m2: WeibullLikeModel) -> float:
    if m1.beta != m2.beta:
        raise UnsupportedError(
            f"pair asymptotics need a common beta; got {m1.beta!r} and {m2.beta!r} "
            "(use bkr_split for mismatched exponents)"
        )
    return m1.beta


def pair_constants(m1: WeibullLikeModel, m2: WeibullLikeModel) -> PairAsymConstants:
    beta = _check_same_beta(m1, m2)
    r = 1.0 / (beta - 1.0)
    u1, u2 = m1.c**r, m2.c**r
    eta = u1 + u2
    theta1 = u2 / eta
    theta2 = 1.0 - theta1
    kappa = eta ** (beta - 1.0) / (beta * m1.c * m2.c)
    c = m1.c * theta1**beta + m2.c * theta2**beta
    inv_s1 = beta * (beta - 1.0) * m1.c * theta1 ** (beta - 2.0) * kappa**2
    inv_s2 = beta * (beta - 1.0) * m2.c * theta2 ** (beta - 2.0) * kappa**2
    sigma_sq = 1.0 / (inv_s1 + inv_s2)
    log_k = (
        m1.log_d
        + m2.log_d
        + m1.alpha * math.log(theta1)
        + m2.alpha * math.log(theta2)
        + math.log(kappa)
        + (1.0 - beta) * math.log(eta)
        + 0.5 * (_LOG_2PI + math.log(sigma_sq))
        - math.log(beta)
    )
    return PairAsymConstants(
        eta=eta,
        theta1=theta1,
        theta2=theta2,
        kappa=kappa,
        c=c,
        sigma1_sq=1.0 / inv_s1,
        sigma2_sq=1.0 / inv_s2,
        sigma_sq=sigma_sq,
        log_k=log_k,
        gamma_exp=m1.alpha + m2.alpha + beta / 2.0,
    )


def _canonical_order(
    m1: WeibullLikeModel, m2: WeibullLikeModel
) -> tuple[WeibullLikeModel, WeibullLikeModel]:
    key1 = (m1.c, m1.alpha, m1.d)
    key2 = (m2.c, m2.alpha, m2.d)
    return (m1, m2) if key1 <= key2 else (m2, m1)


def pair_tail_asymptote(m1: WeibullLikeModel, m2: WeibullLikeModel) -> TailAsymptote:
    """P(X1 + X2 > x) ~ k x**gamma exp(-c x**beta); symmetric in its arguments."""
    first, second = _canonical_order(m1, m2)
    consts = pair_constants(first, second)
    return TailAsymptote(log_k=consts.log_k, p=consts.gamma_exp, c=consts.c, beta=first.beta)


def pair_density_asymptote(m1: WeibullLikeModel, m2: WeibullLikeModel) -> TailAsymptote:
    return pair_tail_asymptote(m1, m2).density()


def _check_n(n: int, minimum: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")


def nfold_asymptote(model: WeibullLikeModel, n: int) -> TailAsymptote:
    """Closed-form c(n), alpha(n), k(n) of the n-fold convolution tail."""
    _check_n(n, 1)
    beta, c, alpha = model.beta, model.c, model.alpha
    log_k = (
        n * model.log_d
        - math.log(beta * c)
        + 0.5 * (n - 1) * (_LOG_2PI - math.log(beta * (beta - 1.0) * c))
        + 0.5 * (beta - n * (2.0 * alpha + beta) - 1.0) * math.log(n)
    )
    return TailAsymptote(
        log_k=log_k,
        p=n * alpha + (n - 1) * beta / 2.0,
        c=c / n ** (beta - 1.0),
        beta=beta,
    )


def nfold_by_recursion(model: WeibullLikeModel, n: int) -> TailAsymptote:
    """Iterate F (+) F^{*(n-1)}; reproduces nfold_asymptote term by term."""
    _check_n(n, 2)
    current = nfold_asymptote(model, 1)
    for _ in range(2, n + 1):
        consts = pair_constants(model, current.as_model())
        current = TailAsymptote(
            log_k=consts.log_k, p=consts.gamma_exp, c=consts.c, beta=model.beta
        )
    return current


def _solve_split(m1: BkrModel, m2: BkrModel, x: float, rtol: float) -> float:
    lo = m1.support_low
    hi = x - m2.support_low
    if not hi > lo:
        raise NoSolutionError(
            f"x={x!r} is below the joint support bound {m1.support_low + m2.support_low!r}",
            feasible=(m1.support_low + m2.support_low, math.inf),
        )

    def gap(q: float) -> float:
        return m1.lam(q) - m2.lam(x - q)

    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo > 0.0 or g_hi < 0.0:
        raise NoSolutionError(
            f"hazard ranges do not overlap at x={x!r}: "
            f"lam1-lam2 is {g_lo:.6g} at q={lo!r} and {g_hi:.6g} at q={hi!r}",
        )
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    return float(brentq(gap, lo, hi, xtol=1e-300, rtol=max(rtol, 4.5e-16), maxiter=500))


def bkr_split(
    m1: BkrModel, m2: BkrModel, x: float, *, rtol: float = SPLIT_RTOL
) -> SplitSolution:
    """Solve q1 + q2 = x, lam1(q1) = lam2(q2) and assemble (psi, gamma) of the sum."""
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    q1 = _solve_split(m1, m2, x, rtol)
    q2 = x - q1
    lam1 = m1.lam(q1)
    h = x * 1e-5
    lam_plus = m1.lam(_solve_split(m1, m2, x + h, rtol))
    lam_minus = m1.lam(_solve_split(m1, m2, x - h, rtol))
    slope = (lam_plus - lam_minus) / (2.0 * h)
    gamma_out = (
        math.sqrt(2.0 * math.pi * slope / (m1.lam_prime(q1) * m2.lam_prime(q2)))
        * m1.gamma_flat(q1)
        * m2.gamma_flat(q2)
    )
    residual = abs(lam1 - m2.lam(q2)) / lam1 if lam1 != 0.0 else abs(m2.lam(q2))
    logger.debug("split at x=%g: q1=%g q2=%g residual=%.3g", x, q1, q2, residual)
    return SplitSolution(
        q1=q1,
        q2=q2,
        lambda_at_split=lam1,
        psi_sum=m1.psi(q1) + m2.psi(q2),
        gamma_out=gamma_out,
        lambda_slope=slope,
        residual=residual,
    )


@dataclass(frozen=True)
class ConvolutionPoint:
    psi_x: float
    gamma_x: float
    lambda_x: float
    log_tail: float
    split: SplitSolution


def bkr_convolve_at(m1: BkrModel, m2: BkrModel, x: float) -> ConvolutionPoint:
    """Density gamma(x) exp(-psi(x)) of the sum and its tail gamma e^-psi / lambda."""
    split = bkr_split(m1, m2, x)
    log_tail = math.log(split.gamma_out) - split.psi_sum - math.log(split.lambda_at_split)
    return ConvolutionPoint(
        psi_x=split.psi_sum,
        gamma_x=split.gamma_out,
        lambda_x=split.lambda_at_split,
        log_tail=log_tail,
        split=split,
    )


def exp_class_discrepancy(gammas: Sequence[float]) -> float:
    """Factor prod Gamma(gamma_i) separating the oracle-consistent beta=1 constant
    from the form that omits it."""
    return math.exp(sum(math.lgamma(g) for g in gammas))


def exp_class_tail(models: Sequence[ExpClassTerm], k: float, x: float) -> float:
    """log P(S_n > x) for tails ell_i(x) x**(gamma_i-1) exp(-k x), beta = 1.

    Uses k**(n-1) * prod Gamma(gamma_i) / Gamma(gamma_0) * x**(gamma_0-1)
    * prod ell_i(x) * exp(-k x), which reproduces the exact gamma convolution.
    """
    if not models:
        raise DomainError("exp_class_tail needs at least one summand")
    if k <= 0.0:
        raise DomainError(f"k must be positive, got {k!r}")
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    gammas = [float(g) for _, g in models]
    if any(g <= 0.0 for g in gammas):
        raise DomainError(f"every gamma_i must be positive, got {gammas!r}")
    gamma0 = sum(gammas)
    n = len(models)
    log_ell = 0.0
    for ell, _ in models:
        value = ell(x)
        if not value > 0.0:
            raise DomainError(f"slowly varying factors must be positive, got {value!r} at x={x!r}")
        log_ell += math.log(value)
    return (
        (n - 1) * math.log(k)
        + sum(math.lgamma(g) for g in gammas)
        - math.lgamma(gamma0)
        + (gamma0 - 1.0) * math.log(x)
        + log_ell
        - k * x
    )


def beta_norm_log_bound(
    models: Sequence[Union[ExpClassTerm, GammaWeibullModel]],
    k: float,
    beta: float,
    n: int,
    x: float,
) -> float:
    """Log upper bound from P(S_n > x) <= P(sum X_i**beta > x**beta / n**(beta-1)).

    Exact gamma-Weibull laws sharing k and beta make sum k X_i**beta a Gamma variable,
    so the right side is an incomplete gamma value and the bound holds for every x.

    For (ell, gamma) terms each X_i**beta has tail ell_i(u**(1/beta)) u**((gamma_i-1)/beta)
    exp(-k u), which is again of exponential class. The right side is then the
    exp_class_tail value times y / (y - a0 + 1) with y = k u and a0 the summed shape
    (the factor only when a0 > 1), which dominates Gamma(a0, y) for y > a0 - 1. Below
    that range the terms carry no usable bound and UnsupportedError is raised.
    """
    _check_n(n, 1)
    if len(models) != n:
        raise DomainError(f"expected {n} summand terms, got {len(models)}")
    if beta < 1.0:
        raise UnsupportedError("the beta-norm bound needs beta >= 1")
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    u = x**beta / n ** (beta - 1.0)

    laws = [m for m in models if isinstance(m, GammaWeibullModel)]
    if laws:
        if len(laws) != n:
            raise DomainError("cannot mix exact laws with (ell, gamma) terms")
        if any(law.k != k or law.beta != beta for law in laws):
            raise DomainError(f"every law must have k={k!r} and beta={beta!r}")
        return special.log_gamma_q(sum(law.shape for law in laws), k * u)

    inv = 1.0 / beta
    powered: list[ExpClassTerm] = [
        ((lambda v, ell=ell: ell(v**inv)), (g - 1.0) * inv + 1.0)
        for ell, g in cast(Sequence[ExpClassTerm], models)
    ]
    a0 = sum(g for _, g in powered)
    y = k * u
    if a0 <= 1.0:
        return exp_class_tail(powered, k, u)
    if y <= a0 - 1.0:
        raise UnsupportedError(
            f"k x**beta / n**(beta-1) = {y!r} is below {a0 - 1.0!r}; pass exact laws for this range"
        )
    return exp_class_tail(powered, k, u) + math.log(y / (y - a0 + 1.0))
