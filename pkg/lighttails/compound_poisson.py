"""Tail approximations for the compound Poisson sum S_N, N ~ Poisson(mu)."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Literal

from scipy.optimize import brentq

from core.errors import AccuracyError, DomainError, NoSolutionError, UnsupportedError
from lighttails import special
from lighttails.distributions import (
    GammaWeibullModel,
    SummandModel,
    WeibullLikeModel,
    exact_law,
)
from lighttails.tilting import MgfValue, log_mgf_at_scale, mgf_numeric

logger = logging.getLogger(__name__)

MgfProvider = Callable[[SummandModel, float], MgfValue]

_BRANCH_POINT = -math.exp(-1.0)
_HALLEY_STEPS = 100
_THETA_FLOOR = 1e-6


@dataclass(frozen=True)
class CompoundModel:
    mu: float
    severity: SummandModel

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu) or self.mu <= 0.0:
            raise DomainError(f"mu must be positive and finite, got {self.mu!r}")

    @property
    def standard_scale(self) -> float:
        """c of a severity with tail exp(-c x**beta), else an UnsupportedError."""
        sev = self.severity
        if isinstance(sev, GammaWeibullModel) and sev.is_vanilla and sev.beta > 1.0:
            return sev.k
        if isinstance(sev, WeibullLikeModel) and sev.is_exact:
            return sev.c
        raise UnsupportedError(
            "the Lambert-W route needs a standard Weibull severity with beta > 1"
        )

    def to_record(self) -> dict[str, Any]:
        return {"mu": self.mu, "severity": self.severity.to_record()}


@dataclass(frozen=True)
class SaddlepointSolution:
    y: float
    theta: float
    c1: float
    w: float
    residual: float


@dataclass(frozen=True)
class EsscherResult:
    log_value: float
    theta: float
    sigma_c: float
    ell: float

    def to_record(self) -> dict[str, Any]:
        return {
            "log10_tail": self.log_value / math.log(10.0),
            "theta": self.theta,
            "sigma_c": self.sigma_c,
            "ell": self.ell,
        }


def lambert_w0(v: float) -> float:
    """Principal branch of w * exp(w) = v by Halley's method."""
    if math.isnan(v) or v < _BRANCH_POINT:
        raise DomainError(f"lambert_w0 needs v >= -1/e, got {v!r}")
    if v == 0.0:
        return 0.0
    if v == _BRANCH_POINT:
        return -1.0
    if math.isinf(v):
        return math.inf
    if v < -0.25:
        # series about the branch point
        p = math.sqrt(max(2.0 * (math.e * v + 1.0), 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    else:
        ell = math.log1p(v)
        w = ell * (1.0 - math.log1p(ell) / (2.0 + ell))
    for _ in range(_HALLEY_STEPS):
        ew = math.exp(w)
        f = w * ew - v
        w1 = w + 1.0
        if w1 == 0.0:
            break
        dw = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= dw
        if abs(dw) <= 1e-15 * (1.0 + abs(w)):
            return w
    return w


def saddlepoint_scale(mu: float, beta: float, x: float) -> SaddlepointSolution:
    """Closed-form y solving mu * y * F~[lam(y)] = x for a standard Weibull severity.

    With v = y**beta the equation becomes w e^w = z for w = 2 beta (beta-1) v / (beta+2)
    and z = (2 beta (beta-1) / (beta+2)) (x / c1)**(2 beta / (beta+2)).
    """
    if not math.isfinite(mu) or mu <= 0.0:
        raise DomainError(f"mu must be positive, got {mu!r}")
    if not math.isfinite(beta) or beta <= 1.0:
        raise DomainError(f"beta must exceed 1, got {beta!r}")
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    c1 = mu * math.sqrt(2.0 * math.pi * beta / (beta - 1.0))
    rate = 2.0 * beta * (beta - 1.0) / (beta + 2.0)
    argument = rate * math.exp((2.0 * beta / (beta + 2.0)) * math.log(x / c1))
    w = lambert_w0(argument)
    y = (w / rate) ** (1.0 / beta)
    standard = WeibullLikeModel(alpha=0.0, beta=beta, c=1.0, d=beta)
    log_lhs = math.log(mu) + math.log(y) + log_mgf_at_scale(standard, y)
    residual = abs(math.expm1(log_lhs - math.log(x)))
    return SaddlepointSolution(
        y=y,
        theta=standard.hazard_rate(y),
        c1=c1,
        w=w,
        residual=residual,
    )


def _log_expm1(t: float) -> float:
    """log(e^t - 1) for t > 0 without overflow."""
    if t > 50.0:
        return t + math.log1p(-math.exp(-t))
    return math.log(math.expm1(t))


def _solve_theta(cm: CompoundModel, x: float, mgf: MgfProvider) -> float:
    law = exact_law(cm.severity)

    def gap(theta: float) -> float:
        return math.log(cm.mu) + mgf(law, theta).log_d1 - math.log(x)

    lo = _THETA_FLOOR if law.beta > 1.0 else min(_THETA_FLOOR, 0.5 * law.k)
    if gap(lo) >= 0.0:
        raise NoSolutionError(
            f"x={x!r} is too close to the compound mean for the Esscher root",
            feasible=(cm.mu * law.mean, math.inf),
        )
    hi = 1.0 if law.beta > 1.0 else 0.5 * (lo + law.k)
    for _ in range(200):
        if gap(hi) > 0.0:
            break
        hi = 2.0 * hi if law.beta > 1.0 else 0.5 * (hi + law.k)
    else:
        raise NoSolutionError(f"could not bracket the Esscher tilt for x={x!r}")
    return float(brentq(gap, lo, hi, xtol=1e-300, rtol=1e-12))


def esscher_approximation(
    cm: CompoundModel, x: float, mgf: MgfProvider = mgf_numeric
) -> EsscherResult:
    """Esscher approximation with the tilt solving mu * F^'[theta] = x."""
    law = exact_law(cm.severity)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    floor = cm.mu * law.mean
    if x <= floor:
        raise NoSolutionError(
            f"the Esscher approximation needs x > mu * E X = {floor:.6g}, got {x!r}",
            feasible=(floor, math.inf),
        )
    theta = _solve_theta(cm, x, mgf)
    value = mgf(law, theta)
    mu_fhat = cm.mu * math.exp(value.log_value)
    log_sigma = 0.5 * (math.log(cm.mu) + value.log_d2)
    sigma_c = math.exp(log_sigma)
    ell = theta * sigma_c
    log_tail = (
        -cm.mu
        + _log_expm1(mu_fhat)
        - theta * x
        - math.log(ell)
        + special.log_mills_b0(ell)
    )
    if log_tail > 0.0:
        raise AccuracyError(
            "Esscher approximation exceeds one; x is outside its regime",
            best_estimate=log_tail,
            achieved_tol=math.inf,
        )
    logger.debug("esscher x=%g theta=%.8g ell=%.6g", x, theta, ell)
    return EsscherResult(log_value=log_tail, theta=theta, sigma_c=sigma_c, ell=ell)


def esscher_tail(cm: CompoundModel, x: float, mgf: MgfProvider = mgf_numeric) -> float:
    return esscher_approximation(cm, x, mgf).log_value


def log_asym_tail(
    cm: CompoundModel, x: float, variant: Literal["consistent", "rate-weighted"] = "consistent"
) -> float:
    """Log-asymptotic tail of S_N for a standard Weibull severity.

    ``consistent`` uses exp{x/y} and sigma_c**2 ~ x y, which follow from the
    saddlepoint equation; ``rate-weighted`` keeps the mu x / y and mu x y forms, which
    overshoot by exp{(mu - 1) x / y} and can exceed one once mu > 1.
    """
    if variant not in ("consistent", "rate-weighted"):
        raise DomainError(f"variant must be 'consistent' or 'rate-weighted', got {variant!r}")
    scale = cm.standard_scale
    beta = cm.severity.beta
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    xs = x * scale ** (1.0 / beta)
    solution = saddlepoint_scale(cm.mu, beta, xs)
    y, theta = solution.y, solution.theta
    weight = cm.mu if variant == "rate-weighted" else 1.0
    ell = theta * math.sqrt(weight * xs * y)
    return (
        -cm.mu
        + _log_expm1(weight * xs / y)
        - theta * xs
        - math.log(ell)
        + special.log_mills_b0(ell)
    )
