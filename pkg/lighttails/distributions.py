"""Summand models: Weibull-like asymptotic laws, the exact gamma-Weibull family, and
the function-valued light-tailed class used by the saddle split solver."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Union

import numpy as np

from core.errors import DomainError, UnsupportedError
from core.model_types import ArrayLike
from lighttails import special

logger = logging.getLogger(__name__)

RealFunction = Callable[[float], float]

_GRID_POINTS = 64
_GRID_DECADES = 6.0


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class WeibullLikeModel:
    """Density asymptotically d * x**(alpha+beta-1) * exp(-c * x**beta)."""

    alpha: float
    beta: float
    c: float
    d: float
    family: str = field(default="weibull-like", init=False)

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "c", "d"):
            _require_finite(name, getattr(self, name))
        if self.beta <= 1.0:
            raise DomainError(f"beta must exceed 1, got {self.beta!r}")
        if self.c <= 0.0:
            raise DomainError(f"c must be positive, got {self.c!r}")
        if self.d <= 0.0:
            raise DomainError(f"d must be positive, got {self.d!r}")

    @property
    def k_tail(self) -> float:
        return tail_coeff_from_density(self)

    @property
    def log_d(self) -> float:
        return math.log(self.d)

    @property
    def is_exact(self) -> bool:
        """True when the asymptotic forms are the exact law exp(-c x**beta)."""
        return self.alpha == 0.0 and math.isclose(
            self.d, self.beta * self.c, rel_tol=1e-14
        )

    def log_tail(self, x: float) -> float:
        _require_finite("x", x)
        if x <= 0.0:
            return 0.0
        if self.is_exact:
            return -self.c * x**self.beta
        value = math.log(self.k_tail) + self.alpha * math.log(x) - self.c * x**self.beta
        return min(value, 0.0)

    def tail(self, x: float) -> float:
        return math.exp(self.log_tail(x))

    def log_density(self, x: float) -> float:
        _require_finite("x", x)
        if x <= 0.0:
            return -math.inf
        return (
            self.log_d
            + (self.alpha + self.beta - 1.0) * math.log(x)
            - self.c * x**self.beta
        )

    def density(self, x: float) -> float:
        return math.exp(self.log_density(x))

    def log_density_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, -np.inf)
        pos = xs > 0.0
        xp = xs[pos]
        out[pos] = (
            self.log_d + (self.alpha + self.beta - 1.0) * np.log(xp) - self.c * xp**self.beta
        )
        return out

    def log_tail_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        pos = xs > 0.0
        xp = xs[pos]
        if self.is_exact:
            out[pos] = -self.c * xp**self.beta
        else:
            out[pos] = np.minimum(
                math.log(self.k_tail) + self.alpha * np.log(xp) - self.c * xp**self.beta,
                0.0,
            )
        return out

    def tail_array(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(self.log_tail_array(xs))

    def hazard_rate(self, x: float) -> float:
        """Leading-order hazard beta * c * x**(beta - 1); exact for the vanilla law."""
        _require_finite("x", x)
        if x <= 0.0:
            raise DomainError(f"hazard_rate needs x > 0, got {x!r}")
        return self.beta * self.c * x ** (self.beta - 1.0)

    def hazard_slope(self, x: float) -> float:
        if x <= 0.0:
            raise DomainError(f"hazard_slope needs x > 0, got {x!r}")
        return self.beta * (self.beta - 1.0) * self.c * x ** (self.beta - 2.0)

    def hazard_scale(self, x: float) -> float:
        """e(x) = 1 / lambda(x), the local scale of the tail."""
        return 1.0 / self.hazard_rate(x)

    def hazard_inverse(self, theta: float) -> float:
        if theta <= 0.0:
            raise DomainError(f"hazard_inverse needs theta > 0, got {theta!r}")
        return (theta / (self.beta * self.c)) ** (1.0 / (self.beta - 1.0))

    def as_exact_law(self) -> "GammaWeibullModel":
        if not self.is_exact:
            raise UnsupportedError(
                "only the vanilla law (alpha=0, d=beta*c) has an exact density; "
                f"got alpha={self.alpha!r}, d={self.d!r}"
            )
        return vanilla_weibull(self.beta, self.c)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
        """Inverse-transform draw (-log U / c)**(1/beta) from the vanilla law."""
        if not self.is_exact:
            raise UnsupportedError(
                "sampling needs an exactly invertible tail; this Weibull-like model "
                "is only known asymptotically"
            )
        u = rng.random(size)
        draws = (-np.log1p(-u) / self.c) ** (1.0 / self.beta)
        return float(draws) if size is None else draws

    @property
    def mean(self) -> float:
        return self.as_exact_law().mean

    def to_record(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "beta": self.beta,
            "c": self.c,
            "d": self.d,
        }


@dataclass(frozen=True)
class GammaWeibullModel:
    """Exact density beta * k**(g/beta) * x**(g-1) * exp(-k x**beta) / Gamma(g/beta)."""

    k: float
    beta: float
    gamma_shape: float
    family: str = field(default="gamma-weibull", init=False)

    def __post_init__(self) -> None:
        for name in ("k", "beta", "gamma_shape"):
            _require_finite(name, getattr(self, name))
        if self.k <= 0.0:
            raise DomainError(f"k must be positive, got {self.k!r}")
        if self.beta < 1.0:
            raise DomainError(f"beta must be at least 1, got {self.beta!r}")
        if self.gamma_shape <= 0.0:
            raise DomainError(f"gamma_shape must be positive, got {self.gamma_shape!r}")

    @property
    def shape(self) -> float:
        """Gamma shape gamma/beta of the variable k * X**beta."""
        return self.gamma_shape / self.beta

    @property
    def log_norm(self) -> float:
        return math.log(self.beta) + self.shape * math.log(self.k) - math.lgamma(self.shape)

    @property
    def is_vanilla(self) -> bool:
        return self.gamma_shape == self.beta

    def log_density(self, x: float) -> float:
        """log f(x); x <= 0 maps to -inf (density 0 by convention)."""
        _require_finite("x", x)
        if x <= 0.0:
            return -math.inf
        return self.log_norm + (self.gamma_shape - 1.0) * math.log(x) - self.k * x**self.beta

    def density(self, x: float) -> float:
        return math.exp(self.log_density(x))

    def log_tail(self, x: float) -> float:
        _require_finite("x", x)
        if x <= 0.0:
            return 0.0
        return special.log_gamma_q(self.shape, self.k * x**self.beta)

    def tail(self, x: float) -> float:
        return math.exp(self.log_tail(x))

    def log_density_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.full(xs.shape, -np.inf)
        pos = xs > 0.0
        xp = xs[pos]
        out[pos] = self.log_norm + (self.gamma_shape - 1.0) * np.log(xp) - self.k * xp**self.beta
        return out

    def log_tail_array(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        out = np.zeros(xs.shape)
        pos = xs > 0.0
        out[pos] = special.log_gamma_q_array(self.shape, self.k * xs[pos] ** self.beta)
        return out

    def tail_array(self, xs: np.ndarray) -> np.ndarray:
        return np.exp(self.log_tail_array(xs))

    def hazard_rate(self, x: float) -> float:
        """Exact f(x) / F(x, inf), formed in log space."""
        if x <= 0.0:
            raise DomainError(f"hazard_rate needs x > 0, got {x!r}")
        if self.is_vanilla:
            return self.beta * self.k * x ** (self.beta - 1.0)
        return math.exp(self.log_density(x) - self.log_tail(x))

    def hazard_slope(self, x: float) -> float:
        """lambda'(x); centred difference with h = x * 1e-5 unless vanilla."""
        if x <= 0.0:
            raise DomainError(f"hazard_slope needs x > 0, got {x!r}")
        if self.is_vanilla:
            return self.beta * (self.beta - 1.0) * self.k * x ** (self.beta - 2.0)
        h = x * 1e-5
        return (self.hazard_rate(x + h) - self.hazard_rate(x - h)) / (2.0 * h)

    def hazard_scale(self, x: float) -> float:
        return 1.0 / self.hazard_rate(x)

    def hazard_inverse(self, theta: float) -> float:
        """Leading-order inverse of the hazard; used for window hints only."""
        if theta <= 0.0:
            raise DomainError(f"hazard_inverse needs theta > 0, got {theta!r}")
        if self.beta == 1.0:
            if theta >= self.k:
                raise DomainError(f"theta must stay below k={self.k!r} when beta=1")
            return max(self.gamma_shape - 1.0, 1.0) / (self.k - theta)
        return (theta / (self.beta * self.k)) ** (1.0 / (self.beta - 1.0))

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> ArrayLike:
        """Draw (Y / k)**(1/beta) with Y ~ Gamma(gamma/beta, 1)."""
        y = rng.standard_gamma(self.shape, size)
        draws = (y / self.k) ** (1.0 / self.beta)
        return float(draws) if size is None else draws

    def moment(self, power: float) -> float:
        return math.exp(
            math.lgamma((self.gamma_shape + power) / self.beta)
            - math.lgamma(self.shape)
            - (power / self.beta) * math.log(self.k)
        )

    @property
    def mean(self) -> float:
        return self.moment(1.0)

    def as_weibull_like(self) -> WeibullLikeModel:
        """The same law written as WeibullLike(alpha=g-beta, c=k, d=beta k^(g/beta)/Gamma(g/beta))."""
        if self.beta <= 1.0:
            raise UnsupportedError("the Weibull-like view needs beta > 1")
        if self.is_vanilla:
            return WeibullLikeModel(alpha=0.0, beta=self.beta, c=self.k, d=self.beta * self.k)
        return WeibullLikeModel(
            alpha=self.gamma_shape - self.beta,
            beta=self.beta,
            c=self.k,
            d=math.exp(self.log_norm),
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "k": self.k,
            "beta": self.beta,
            "gamma": self.gamma_shape,
        }


SummandModel = Union[WeibullLikeModel, GammaWeibullModel]


def vanilla_weibull(beta: float, c: float = 1.0) -> GammaWeibullModel:
    """Exact law with tail exp(-c x**beta), any beta >= 1."""
    return GammaWeibullModel(k=c, beta=beta, gamma_shape=beta)


def exact_law(model: SummandModel) -> GammaWeibullModel:
    """The exactly evaluable law behind ``model`` or an UnsupportedError."""
    if isinstance(model, GammaWeibullModel):
        return model
    return model.as_exact_law()


def weibull_like_view(model: SummandModel) -> WeibullLikeModel:
    if isinstance(model, WeibullLikeModel):
        return model
    return model.as_weibull_like()


def tail_coeff_from_density(model: WeibullLikeModel) -> float:
    """k_tail = d / (beta c)."""
    return model.d / (model.beta * model.c)


def tail(model: SummandModel, x: float) -> float:
    return model.tail(x)


def log_tail(model: SummandModel, x: float) -> float:
    return model.log_tail(x)


def density(model: SummandModel, x: float) -> float:
    return model.density(x)


def hazard_rate(model: SummandModel, x: float) -> float:
    return model.hazard_rate(x)


def sample(
    model: SummandModel, rng: np.random.Generator, size: Optional[int] = None
) -> ArrayLike:
    return model.sample(rng, size)


@dataclass(frozen=True)
class BkrModel:
    """Density gamma_flat(z) * exp(-psi(z)) with convex psi and increasing hazard psi'.

    ``gamma_flat`` must be flat for psi (gamma(x + y / sqrt(lam'(x))) / gamma(x) -> 1);
    that property is the caller's responsibility and is not checked.
    """

    psi: RealFunction
    lam: RealFunction
    lam_prime: RealFunction
    gamma_flat: RealFunction
    support_low: float = 0.0

    def __post_init__(self) -> None:
        _require_finite("support_low", self.support_low)
        base = self.support_low if self.support_low > 0.0 else 1e-2
        grid = np.geomspace(base, base * 10.0**_GRID_DECADES, _GRID_POINTS)
        if self.support_low <= 0.0:
            grid = grid + self.support_low
        lam_values = np.array([self.lam(float(z)) for z in grid])
        slopes = np.array([self.lam_prime(float(z)) for z in grid])
        if not np.all(np.isfinite(lam_values)) or np.any(np.diff(lam_values) <= 0.0):
            raise DomainError("lam must be finite and strictly increasing on the check grid")
        if np.any(slopes <= 0.0):
            raise DomainError("lam_prime must be positive on the check grid")

    @classmethod
    def from_weibull_like(cls, model: WeibullLikeModel) -> "BkrModel":
        beta, c, d, alpha = model.beta, model.c, model.d, model.alpha
        return cls(
            psi=lambda z: c * z**beta,
            lam=lambda z: beta * c * z ** (beta - 1.0),
            lam_prime=lambda z: beta * (beta - 1.0) * c * z ** (beta - 2.0),
            gamma_flat=lambda z: d * z ** (alpha + beta - 1.0),
            support_low=0.0,
        )


def model_from_record(record: Mapping[str, Any]) -> SummandModel:
    """Build a model from a flat record such as {family, alpha, beta, c, d}."""
    family = str(record.get("family", "")).strip().lower()
    try:
        if family == "weibull-like":
            return WeibullLikeModel(
                alpha=float(record["alpha"]),
                beta=float(record["beta"]),
                c=float(record["c"]),
                d=float(record["d"]),
            )
        if family == "gamma-weibull":
            return GammaWeibullModel(
                k=float(record["k"]),
                beta=float(record["beta"]),
                gamma_shape=float(record["gamma"]),
            )
        if family == "weibull":
            return vanilla_weibull(float(record["beta"]), float(record.get("c", 1.0)))
    except KeyError as exc:
        raise DomainError(f"model record for {family!r} is missing {exc.args[0]!r}") from exc
    raise DomainError(
        f"unknown model family {family!r}; expected weibull-like, gamma-weibull or weibull"
    )
