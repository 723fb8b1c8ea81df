"""Adaptive Gauss-Kronrod (G7/K15) quadrature carried out in log space.

Integrands are passed as vectorised log-densities. Every interval stores the log of
its Kronrod value and of its |K15 - G7| error estimate, and the running total is
accumulated with log-sum-exp, so integrals around e^-700 and below are handled.
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from core.errors import AccuracyError, DomainError

logger = logging.getLogger(__name__)

LogIntegrand = Callable[[np.ndarray], np.ndarray]

# QUADPACK qk15 abscissae and weights on [-1, 1].
_XGK = np.array(
    [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ]
)
_WGK = np.array(
    [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ]
)
_WG = np.array(
    [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ]
)

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd entries of _XGK (indices 1, 3, 5, 7).
for _slot, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_slot] = _w
    GAUSS_WEIGHTS[14 - _slot] = _w
GAUSS_WEIGHTS[7] = _WG[3]

LOG_DROP = 80.0


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_log_floor: float = -60.0
    max_subdivisions: int = 2000

    def __post_init__(self) -> None:
        if not 0.0 < self.rel_tol <= 1e-3:
            raise DomainError(f"rel_tol must lie in (0, 1e-3], got {self.rel_tol!r}")
        if self.max_subdivisions < 64:
            raise DomainError(
                f"max_subdivisions must be at least 64, got {self.max_subdivisions!r}"
            )
        if not self.abs_log_floor < 0.0:
            raise DomainError("abs_log_floor must be negative")

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(
            rel_tol=self.rel_tol / 2.0,
            abs_log_floor=self.abs_log_floor,
            max_subdivisions=self.max_subdivisions,
        )


@dataclass(frozen=True)
class LogQuadResult:
    log_value: float
    log_error: float
    intervals: int

    @property
    def rel_error(self) -> float:
        if self.log_value == -math.inf:
            return 0.0
        return math.exp(self.log_error - self.log_value)


def _log_kronrod(log_f: LogIntegrand, a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    centre = 0.5 * (a + b)
    values = np.asarray(log_f(centre + half * NODES), dtype=float)
    peak = float(np.max(values))
    if not math.isfinite(peak):
        if peak == math.inf or math.isnan(peak):
            raise DomainError(f"integrand is not finite on [{a!r}, {b!r}]")
        return -math.inf, -math.inf
    scaled = np.exp(values - peak)
    kronrod = float(np.dot(KRONROD_WEIGHTS, scaled))
    gauss = float(np.dot(GAUSS_WEIGHTS, scaled))
    log_half = math.log(half)
    log_value = peak + log_half + math.log(kronrod) if kronrod > 0 else -math.inf
    diff = abs(kronrod - gauss)
    log_error = peak + log_half + math.log(diff) if diff > 0 else -math.inf
    return log_value, log_error


def log_integrate(
    log_f: LogIntegrand,
    points: Sequence[float],
    spec: QuadratureSpec = QuadratureSpec(),
) -> LogQuadResult:
    """Integrate exp(log_f) over [points[0], points[-1]] by adaptive bisection.

    ``points`` are the initial breakpoints; the interval with the largest error is
    bisected until the summed error falls below ``rel_tol`` times the total or the
    largest remaining error is negligible relative to the total.
    """
    edges = sorted({float(p) for p in points})
    if len(edges) < 2:
        raise DomainError("log_integrate needs at least two distinct breakpoints")

    heap: list[tuple[float, float, float, float]] = []
    for a, b in zip(edges[:-1], edges[1:]):
        value, error = _log_kronrod(log_f, a, b)
        heapq.heappush(heap, (-error, a, b, value))

    def totals() -> tuple[float, float]:
        values = np.array([item[3] for item in heap])
        errors = np.array([-item[0] for item in heap])
        return float(logsumexp(values)), float(logsumexp(errors))

    log_total, log_err = totals()
    log_tol = math.log(spec.rel_tol)
    while True:
        if log_total == -math.inf:
            return LogQuadResult(-math.inf, -math.inf, len(heap))
        if log_err <= log_total + log_tol:
            return LogQuadResult(log_total, log_err, len(heap))
        worst = -heap[0][0]
        if worst < log_total + spec.abs_log_floor:
            return LogQuadResult(log_total, log_err, len(heap))
        if len(heap) >= spec.max_subdivisions:
            raise AccuracyError(
                "adaptive quadrature hit the subdivision limit",
                best_estimate=log_total,
                achieved_tol=math.exp(log_err - log_total),
            )
        _, a, b, _ = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        for lo, hi in ((a, mid), (mid, b)):
            value, error = _log_kronrod(log_f, lo, hi)
            heapq.heappush(heap, (-error, lo, hi, value))
        log_total, log_err = totals()


def locate_peak(log_f: LogIntegrand, lo: float, hi: float) -> tuple[float, float]:
    """Return (argmax, max) of a unimodal log-integrand on [lo, hi]."""

    def objective(z: float) -> float:
        value = float(np.asarray(log_f(np.array([z])))[0])
        return -value if math.isfinite(value) else math.inf

    result = minimize_scalar(
        objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10 * max(1.0, abs(hi))}
    )
    best_z, best_v = float(result.x), -float(result.fun)
    for edge in (lo, hi):
        edge_v = -objective(edge)
        if edge_v > best_v:
            best_z, best_v = edge, edge_v
    return best_z, best_v


def peaked_window(
    log_f: LogIntegrand,
    lower: float,
    guess: float,
    scale: float,
    *,
    drop: float = LOG_DROP,
) -> list[float]:
    """Breakpoints covering every region where log_f is within ``drop`` of its peak.

    The peak is searched near ``guess`` at resolution ``scale``; the right edge is
    pushed out by doubling until the integrand has fallen by ``drop``, the left edge
    likewise but never below ``lower``.
    """
    if scale <= 0.0 or not math.isfinite(scale):
        raise DomainError(f"window scale must be positive and finite, got {scale!r}")

    def value(z: float) -> float:
        return float(np.asarray(log_f(np.array([z])))[0])

    lo_b = max(lower, guess - 30.0 * scale)
    hi_b = max(guess + 30.0 * scale, lo_b + scale)
    peak, top = locate_peak(log_f, lo_b, hi_b)

    step = scale
    right = peak + step
    for _ in range(200):
        if value(right) < top - drop:
            break
        step *= 2.0
        right = peak + step
    else:
        raise AccuracyError(
            "integrand does not decay to the right of its peak",
            best_estimate=top,
            achieved_tol=math.inf,
        )

    step = scale
    left = max(lower, peak - step)
    for _ in range(200):
        if left <= lower or value(left) < top - drop:
            break
        step *= 2.0
        left = max(lower, peak - step)

    points = [left, right]
    if peak > left:
        points.append(peak)
    if left == lower and peak > lower:
        # geometric points resolve an integrable singularity at the lower edge
        span = peak - lower
        points.extend(lower + span * 10.0 ** (-j) for j in range(1, 9))
    logger.debug("quadrature window [%g, %g] around peak %g", left, right, peak)
    return sorted(set(points))


def log_panel_integrate(
    log_f: Callable[[np.ndarray, np.ndarray], np.ndarray],
    upper: np.ndarray,
    panels: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Composite G7/K15 rule for many integrals over [0, upper[i]] at once.

    ``log_f(s, z)`` receives the broadcast outer parameter ``s`` (shape (m, 1)) and
    inner nodes ``z`` (shape (m, panels * 15)). Returns the log integrals and the log
    of their |K - G| error estimates.
    """
    upper = np.asarray(upper, dtype=float)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    centres = 0.5 * (edges[:-1] + edges[1:])
    unit_nodes = (centres[:, None] + half[:, None] * NODES[None, :]).ravel()
    wk = (half[:, None] * KRONROD_WEIGHTS[None, :]).ravel()
    wg = (half[:, None] * GAUSS_WEIGHTS[None, :]).ravel()

    s = upper[:, None]
    z = s * unit_nodes[None, :]
    values = np.asarray(log_f(s, z), dtype=float) + np.log(s)
    peak = np.max(values, axis=1, keepdims=True)
    safe_peak = np.where(np.isfinite(peak), peak, 0.0)
    scaled = np.exp(values - safe_peak)
    kronrod = scaled @ wk
    gauss = scaled @ wg
    with np.errstate(divide="ignore"):
        log_value = safe_peak[:, 0] + np.log(kronrod)
        log_error = safe_peak[:, 0] + np.log(np.abs(kronrod - gauss))
    empty = ~np.isfinite(peak[:, 0])
    log_value[empty] = -np.inf
    log_error[empty] = -np.inf
    return log_value, log_error
