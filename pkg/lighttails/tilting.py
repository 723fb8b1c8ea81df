"""Exponential tilting: m.g.f. asymptotics, numeric m.g.f., and an exact sampler for
the tilted law e^(theta y) f(y) / F^[theta].

The sampler's proposal is a two-component mixture: a moment-matched Gamma(a, b)
carries the bulk, and an increasing truncated exponential on [0, y1] covers the
left edge, where a Gamma with shape above gamma decays more slowly than the target
and the plain Gamma ratio is unbounded. Tangent lines of the log-concave target
certify the left piece; a dense grid plus a slope certificate bounds the right one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln

from core.errors import DomainError, EnvelopeError, NoSolutionError, UnsupportedError
from lighttails.distributions import (
    GammaWeibullModel,
    SummandModel,
    WeibullLikeModel,
    exact_law,
    weibull_like_view,
)
from lighttails.quadrature import QuadratureSpec, log_integrate, peaked_window

logger = logging.getLogger(__name__)

ENVELOPE_SAFETY = math.log(1.01)
GRID_POINTS = 2001
NORMALITY_SHAPE = 25.0
TUNE_MIN_GAIN = 1e-6
TUNE_ROUNDS = 10
_MIN_BATCH = 256


@dataclass(frozen=True)
class MgfValue:
    """log F^[theta] together with the logs of its first two derivatives."""

    theta: float
    log_value: float
    log_d1: float
    log_d2: float

    @property
    def tilted_mean(self) -> float:
        return math.exp(self.log_d1 - self.log_value)

    @property
    def tilted_variance(self) -> float:
        return math.exp(self.log_d2 - self.log_value) - self.tilted_mean**2


def _window_hint(law: GammaWeibullModel, theta: float) -> tuple[float, float]:
    if law.beta == 1.0:
        rate = law.k - theta
        return law.gamma_shape / rate, math.sqrt(law.gamma_shape) / rate
    natural = law.k ** (-1.0 / law.beta)
    guess = max(law.hazard_inverse(theta) if theta > 0.0 else 0.0, natural)
    slope = law.beta * (law.beta - 1.0) * law.k * guess ** (law.beta - 2.0)
    return guess, 1.0 / math.sqrt(slope)


def mgf_numeric(model: SummandModel, theta: float, tol: float = 1e-10) -> MgfValue:
    """log of integral e^(theta z) z^j f(z) dz for j = 0, 1, 2 by log-space quadrature."""
    law = exact_law(model)
    if not math.isfinite(theta) or theta < 0.0:
        raise DomainError(f"theta must be finite and non-negative, got {theta!r}")
    if law.beta == 1.0 and theta >= law.k:
        raise DomainError(
            f"the m.g.f. of a beta=1 law is finite only for theta < k={law.k!r}"
        )
    spec = QuadratureSpec(rel_tol=tol)
    guess, scale = _window_hint(law, theta)
    logs = []
    for power in (0, 1, 2):

        def integrand(z: np.ndarray, power: int = power) -> np.ndarray:
            z = np.asarray(z, dtype=float)
            with np.errstate(divide="ignore"):
                extra = power * np.log(z) if power else 0.0
            return theta * z + law.log_density_array(z) + extra

        points = peaked_window(integrand, 0.0, guess, scale)
        logs.append(log_integrate(integrand, points, spec).log_value)
    return MgfValue(theta=theta, log_value=logs[0], log_d1=logs[1], log_d2=logs[2])


def mgf_asym(model: Union[WeibullLikeModel, GammaWeibullModel], theta: float) -> float:
    """log of sqrt(2 pi / lam'(y)) gamma(y) e^((beta-1) c y^beta) with y = lam^-1(theta)."""
    view = weibull_like_view(model)
    if not math.isfinite(theta) or theta <= 0.0:
        raise DomainError(f"theta must be positive, got {theta!r}")
    y = view.hazard_inverse(theta)
    if y < 1.0:
        logger.warning(
            "theta=%g maps to y=%g < 1; the m.g.f. asymptote is outside its regime", theta, y
        )
    return log_mgf_at_scale(view, y)


def log_mgf_at_scale(model: Union[WeibullLikeModel, GammaWeibullModel], y: float) -> float:
    """log F~[lam(y)], the m.g.f. asymptote written in terms of the tilted scale y."""
    view = weibull_like_view(model)
    if not y > 0.0:
        raise DomainError(f"scale y must be positive, got {y!r}")
    beta = view.beta
    return (
        0.5 * (math.log(2.0 * math.pi) - math.log(view.hazard_slope(y)))
        + view.log_d
        + (view.alpha + beta - 1.0) * math.log(y)
        + (beta - 1.0) * view.c * y**beta
    )


def tilted_moment_asym(
    model: Union[WeibullLikeModel, GammaWeibullModel], theta: float, k: int
) -> float:
    """log E[X^k e^(theta X)] ~ k log y + log F~[theta]."""
    if isinstance(k, bool) or int(k) != k or k < 0:
        raise DomainError(f"k must be a non-negative integer, got {k!r}")
    base = mgf_asym(model, theta)
    if k == 0:
        return base
    y = weibull_like_view(model).hazard_inverse(theta)
    return k * math.log(y) + base


def solve_mean_tilt(model: SummandModel, mean: float, tol: float = 1e-10) -> float:
    """theta with E_theta X = mean."""
    law = exact_law(model)
    if mean <= law.mean:
        raise NoSolutionError(
            f"a tilt with mean {mean!r} needs mean > E X = {law.mean!r}",
            feasible=(law.mean, math.inf),
        )

    def gap(theta: float) -> float:
        value = mgf_numeric(law, theta, tol)
        return value.log_d1 - value.log_value - math.log(mean)

    if law.beta == 1.0:
        hi = 0.5 * law.k
        while gap(hi) < 0.0:
            hi = 0.5 * (hi + law.k)
            if law.k - hi < 1e-12 * law.k:
                raise NoSolutionError(f"no tilt below k reaches mean {mean!r}")
    else:
        hi = 2.0 * law.hazard_rate(mean)
        for _ in range(200):
            if gap(hi) > 0.0:
                break
            hi *= 2.0
        else:
            raise NoSolutionError(f"could not bracket the tilt for mean {mean!r}")
    return float(brentq(gap, 0.0, hi, rtol=1e-12))


def _log_gamma_pdf(y: np.ndarray, a: float, b: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return a * math.log(b) - float(gammaln(a)) + (a - 1.0) * np.log(y) - b * y


@dataclass(frozen=True)
class _Envelope:
    log_m: float
    log_eps: float
    log_1m_eps: float
    split_point: float
    left_slope: float


class _Target:
    def __init__(self, law: GammaWeibullModel, theta: float) -> None:
        self.law = law
        self.theta = theta

    def log_t(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return self.theta * y + self.law.log_density_array(y)

    def slope(self, y: np.ndarray) -> np.ndarray:
        law = self.law
        return self.theta + (law.gamma_shape - 1.0) / y - law.beta * law.k * y ** (law.beta - 1.0)

    def mode(self, centre: float) -> float:
        lo = centre * 1e-12
        hi = centre
        while float(self.slope(np.array([hi]))[0]) > 0.0:
            hi *= 2.0
        if float(self.slope(np.array([lo]))[0]) <= 0.0:
            return lo
        return float(brentq(lambda y: float(self.slope(np.array([y]))[0]), lo, hi, rtol=1e-13))


def _right_end(target: _Target, a: float, b: float, centre: float) -> float:
    law = target.law
    end = 4.0 * centre
    for _ in range(40):
        bound = (
            max(law.gamma_shape - a, 0.0) / end
            + target.theta
            + b
            - law.beta * law.k * end ** (law.beta - 1.0)
        )
        if bound < 0.0:
            return end
        end *= 2.0
    raise EnvelopeError("the gamma-piece ratio is not eventually decreasing")


def _build_envelope(target: _Target, a: float, b: float, centre: float) -> _Envelope:
    law = target.law
    end = _right_end(target, a, b, centre)
    mode = target.mode(centre)
    sd = 1.0 / math.sqrt(law.hazard_slope(centre))
    grid = np.union1d(
        np.linspace(centre / 4.0, end, GRID_POINTS),
        np.clip(mode + sd * np.linspace(-12.0, 12.0, 241), centre / 4.0, end),
    )

    def ratio(y: np.ndarray) -> np.ndarray:
        return target.log_t(y) - _log_gamma_pdf(y, a, b)

    r_grid = ratio(grid)
    suffix = np.maximum.accumulate(r_grid[::-1])[::-1]
    left = grid < mode
    if not np.any(left):
        raise EnvelopeError(f"tilted mode {mode!r} lies left of the search range")
    y1 = grid[left]
    s1 = target.slope(y1)
    keep = s1 > 0.0
    if not np.any(keep):
        raise EnvelopeError("no split point with positive tangent slope")
    y1, s1 = y1[keep], s1[keep]
    log_l = target.log_t(y1) + np.log(-np.expm1(-s1 * y1)) - np.log(s1)
    log_g = suffix[: len(grid)][left][keep]
    totals = np.logaddexp(log_l, log_g)
    best = int(np.argmin(totals))
    split = float(y1[best])
    start = int(np.searchsorted(grid, split))

    j = start + int(np.argmax(r_grid[start:]))
    lo = grid[max(j - 1, start)]
    hi = grid[min(j + 1, len(grid) - 1)]
    g0 = float(r_grid[j])
    if hi > lo:
        refined = minimize_scalar(
            lambda y: -float(ratio(np.array([y]))[0]),
            bounds=(lo, hi),
            method="bounded",
            options={"xatol": 1e-12 * hi},
        )
        g0 = max(g0, -float(refined.fun))
    l0 = float(log_l[best])
    m0 = float(np.logaddexp(l0, g0))
    return _Envelope(
        log_m=m0 + ENVELOPE_SAFETY,
        log_eps=l0 - m0,
        log_1m_eps=g0 - m0,
        split_point=split,
        left_slope=float(s1[best]),
    )


@dataclass
class TiltedSampler:
    """Acceptance-rejection sampler for the exponentially tilted summand law."""

    theta: float
    proposal_a: float
    proposal_b: float
    envelope_logM: float
    law: GammaWeibullModel = field(repr=False)
    centre: float = field(repr=False)
    log_mgf: float = field(repr=False)
    envelope: _Envelope = field(repr=False)
    accept_count: int = 0
    propose_count: int = 0

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.propose_count if self.propose_count else math.nan

    @property
    def expected_acceptance(self) -> float:
        """F^[theta] / M, the exact probability that a proposal is accepted."""
        return math.exp(self.log_mgf - self.envelope_logM)

    def clone(self) -> "TiltedSampler":
        return replace(self, accept_count=0, propose_count=0)

    def _log_proposal(self, y: np.ndarray) -> np.ndarray:
        env = self.envelope
        with np.errstate(divide="ignore"):
            left = (
                np.log(env.left_slope)
                + env.left_slope * (y - env.split_point)
                - math.log(-math.expm1(-env.left_slope * env.split_point))
            )
        left = np.where((y >= 0.0) & (y <= env.split_point), left, -np.inf)
        bulk = np.where(y > 0.0, _log_gamma_pdf(np.maximum(y, 1e-300), self.proposal_a, self.proposal_b), -np.inf)
        return np.logaddexp(env.log_eps + left, env.log_1m_eps + bulk)

    def _batch(self, rng: np.random.Generator, count: int) -> np.ndarray:
        env = self.envelope
        pick = rng.random(count)
        u = rng.random(count)
        bulk = rng.gamma(self.proposal_a, 1.0 / self.proposal_b, count)
        accept_u = rng.random(count)
        s1, y1 = env.left_slope, env.split_point
        with np.errstate(divide="ignore"):
            left = y1 + np.log(u + (1.0 - u) * math.exp(-s1 * y1)) / s1
        y = np.where(np.log(pick) < env.log_eps, np.maximum(left, 0.0), bulk)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = self.theta * y + self.law.log_density_array(y) - self._log_proposal(y)
        log_ratio = np.where(np.isnan(log_ratio), -np.inf, log_ratio)
        if np.any(log_ratio > self.envelope_logM):
            worst = float(np.max(log_ratio))
            raise EnvelopeError(
                f"proposal ratio {worst:.6g} exceeds envelope {self.envelope_logM:.6g} "
                f"(theta={self.theta:g}, a={self.proposal_a:g}, b={self.proposal_b:g})"
            )
        accepted = np.log(accept_u) < log_ratio - self.envelope_logM
        self.propose_count += count
        self.accept_count += int(np.count_nonzero(accepted))
        return y[accepted]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Exactly ``size`` draws from the tilted law."""
        if size < 0:
            raise DomainError(f"size must be non-negative, got {size!r}")
        out: list[np.ndarray] = []
        have = 0
        rate = max(self.expected_acceptance, 0.05)
        while have < size:
            need = size - have
            batch = max(_MIN_BATCH, int(math.ceil(1.2 * need / rate)))
            draws = self._batch(rng, batch)
            out.append(draws[:need])
            have += min(len(draws), need)
        return np.concatenate(out) if out else np.empty(0)

    def propose(self, rng: np.random.Generator, count: int) -> int:
        """Run ``count`` proposals and return how many were accepted."""
        return len(self._batch(rng, count))

    def diagnostics(self) -> dict[str, Any]:
        return {
            "theta": self.theta,
            "a": self.proposal_a,
            "b": self.proposal_b,
            "logM": self.envelope_logM,
            "acceptance_rate": self.acceptance_rate,
        }


def _tilting_law(model: SummandModel) -> GammaWeibullModel:
    law = exact_law(model)
    if law.beta <= 1.0:
        raise UnsupportedError("tilted sampling needs beta > 1 so that lam' > 0")
    if law.gamma_shape < 1.0:
        raise UnsupportedError(
            "tilted sampling needs gamma >= 1 (log-concave density) for a certified envelope"
        )
    return law


def _assemble(
    law: GammaWeibullModel, theta: float, a: float, b: float, centre: float, log_mgf: float
) -> TiltedSampler:
    envelope = _build_envelope(_Target(law, theta), a, b, centre)
    return TiltedSampler(
        theta=theta,
        proposal_a=a,
        proposal_b=b,
        envelope_logM=envelope.log_m,
        law=law,
        centre=centre,
        log_mgf=log_mgf,
        envelope=envelope,
    )


def make_tilted_sampler(
    model: SummandModel, x: float, n: int, *, center: str = "hazard"
) -> TiltedSampler:
    """Sampler tilted to the scale x/n with a Gamma(a, b) moment-matched proposal.

    ``center="hazard"`` uses theta = lam(x/n); ``center="mean"`` solves E_theta X = x/n.
    """
    law = _tilting_law(model)
    if isinstance(n, bool) or int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    centre = x / n
    if center == "hazard":
        theta = law.hazard_rate(centre)
    elif center == "mean":
        theta = solve_mean_tilt(law, centre)
    else:
        raise DomainError(f"center must be 'hazard' or 'mean', got {center!r}")
    slope = law.hazard_slope(centre)
    a = centre * centre * slope
    b = centre * slope
    if a < NORMALITY_SHAPE:
        logger.warning(
            "x/n=%g is outside the tilted-normality regime (proposal shape %.3g)", centre, a
        )
    log_mgf = mgf_numeric(law, theta).log_value
    sampler = _assemble(law, theta, a, b, centre, log_mgf)
    logger.debug("tilted sampler %s", sampler.diagnostics())
    return sampler


def sample_tilted(sampler: TiltedSampler, rng: np.random.Generator) -> float:
    return float(sampler.sample(rng, 1)[0])


def tune_proposal(sampler: TiltedSampler) -> TiltedSampler:
    """Coordinate search over the proposal mean and sd to shrink the envelope.

    The search stays local to (x/n, 1/sqrt(lam'(x/n))); when no step improves the
    envelope by more than 1e-6 the input sampler is returned unchanged.
    """
    law, centre, theta = sampler.law, sampler.centre, sampler.theta
    target = _Target(law, theta)
    sd0 = 1.0 / math.sqrt(law.hazard_slope(centre))
    mu_bounds = (max(centre - 3.0 * sd0, 0.5 * centre), centre + 3.0 * sd0)
    sd_bounds = (0.9 * sd0, 1.1 * sd0)

    def cost(mu: float, sd: float) -> float:
        try:
            return _build_envelope(target, mu * mu / (sd * sd), mu / (sd * sd), centre).log_m
        except EnvelopeError:
            return math.inf

    mu = sampler.proposal_a / sampler.proposal_b
    sd = math.sqrt(sampler.proposal_a) / sampler.proposal_b
    best = sampler.envelope_logM
    for _ in range(TUNE_ROUNDS):
        moved = False
        trial = minimize_scalar(
            lambda m: cost(m, sd), bounds=mu_bounds, method="bounded", options={"xatol": 1e-6 * sd0}
        )
        if float(trial.fun) < best - TUNE_MIN_GAIN:
            mu, best, moved = float(trial.x), float(trial.fun), True
        trial = minimize_scalar(
            lambda s: cost(mu, s), bounds=sd_bounds, method="bounded", options={"xatol": 1e-6 * sd0}
        )
        if float(trial.fun) < best - TUNE_MIN_GAIN:
            sd, best, moved = float(trial.x), float(trial.fun), True
        if not moved:
            break
    if best >= sampler.envelope_logM - TUNE_MIN_GAIN:
        logger.info("proposal tuning found no improvement; keeping the sampler")
        return sampler
    tuned = _assemble(law, theta, mu * mu / (sd * sd), mu / (sd * sd), centre, sampler.log_mgf)
    logger.info(
        "tuned proposal mean %.6g sd %.6g, logM %.6g -> %.6g",
        mu,
        sd,
        sampler.envelope_logM,
        tuned.envelope_logM,
    )
    return tuned
