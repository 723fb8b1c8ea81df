"""Numerical convolution tails for small n, used as ground truth by the checks."""

from __future__ import annotations

import logging
import math
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from core.errors import AccuracyError, DomainError
from core.model_types import ExactLaw
from lighttails.convolve_asymptotics import pair_constants
from lighttails.distributions import GammaWeibullModel, SummandModel, exact_law
from lighttails.quadrature import (
    QuadratureSpec,
    locate_peak,
    log_integrate,
    log_panel_integrate,
)

logger = logging.getLogger(__name__)

TABLE_POINTS = 4096
_GEOMETRIC_POINTS = 256
_ROW_BLOCK = 256
_FIRST_PANELS = 8
_MAX_PANELS = 512
_LOG_FLOOR = -1e4

LogDensity = Callable[[np.ndarray], np.ndarray]


def _split_point(law1: GammaWeibullModel, law2: GammaWeibullModel, x: float) -> float:
    if law1.beta == law2.beta and law1.beta > 1.0:
        return pair_constants(law1.as_weibull_like(), law2.as_weibull_like()).theta1 * x

    def log_f(z: np.ndarray) -> np.ndarray:
        return law1.log_density_array(z) + law2.log_tail_array(x - z)

    return locate_peak(log_f, 0.0, x)[0]


def _breakpoints(lower: float, split: float, upper: float) -> list[float]:
    points = {lower, upper}
    if lower < split < upper:
        points.add(split)
        points.update(split - (split - lower) * 2.0 ** (-j) for j in range(1, 6))
        points.update(split + (upper - split) * 2.0 ** (-j) for j in range(1, 6))
    span = (split if lower < split < upper else upper) - lower
    # resolve x**(gamma-1) behaviour at the lower edge
    points.update(lower + span * 10.0 ** (-j) for j in range(1, 9))
    return sorted(points)


def conv_tail_pair(
    m1: SummandModel, m2: SummandModel, x: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """log P(X1 + X2 > x) = log(F1(x, inf) + integral_0^x f1(z) F2(x - z, inf) dz)."""
    law1, law2 = exact_law(m1), exact_law(m2)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    if x <= 0.0:
        return 0.0

    def log_f(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return law1.log_density_array(z) + law2.log_tail_array(x - z)

    split = _split_point(law1, law2, x)
    result = log_integrate(log_f, _breakpoints(0.0, split, x), spec)
    value = float(np.logaddexp(law1.log_tail(x), result.log_value))
    logger.debug(
        "conv_tail_pair x=%g split=%g intervals=%d rel_err=%.2g",
        x,
        split,
        result.intervals,
        result.rel_error,
    )
    return min(value, 0.0)


def _table_grid(law: ExactLaw, x: float) -> np.ndarray:
    upper = x + 40.0 * law.hazard_scale(x)
    head = np.geomspace(upper * 1e-6, upper / 64.0, _GEOMETRIC_POINTS, endpoint=False)
    body = np.linspace(upper / 64.0, upper, TABLE_POINTS - _GEOMETRIC_POINTS)
    return np.concatenate([head, body])


def _influence(law: ExactLaw, grid: np.ndarray, x: float, remaining: int) -> np.ndarray:
    """Log upper bound on how much a unit of density at each grid point moves the final tail.

    The remaining summands exceed x - z with probability at most
    remaining * F((x - z) / remaining).
    """
    gap = np.maximum(x - grid, 0.0) / remaining
    return math.log(remaining) + law.log_tail_array(gap)


def _convolve_table(
    log_prev: LogDensity,
    law: ExactLaw,
    grid: np.ndarray,
    tol: float,
    log_influence: np.ndarray,
    abs_log_floor: float,
) -> np.ndarray:
    """log of integral_0^s prev(z) f(s - z) dz on every grid point, panels doubled to converge.

    Only rows whose weighted contribution to the tail lies within the cutoff of the
    largest one are held to ``tol``.
    """

    def log_f(s: np.ndarray, z: np.ndarray) -> np.ndarray:
        return log_prev(z) + law.log_density_array(s - z)

    blocks = range(0, len(grid), _ROW_BLOCK)
    coarse = np.concatenate(
        [
            log_panel_integrate(log_f, grid[start : start + _ROW_BLOCK], _FIRST_PANELS)[0]
            for start in blocks
        ]
    )
    weight = coarse + log_influence
    finite = weight[np.isfinite(weight)]
    if finite.size == 0:
        return coarse
    drop = max(abs_log_floor, math.log(tol) - math.log(len(grid)))
    cutoff = float(np.max(finite)) + drop

    out = np.empty_like(grid)
    for start in blocks:
        rows = grid[start : start + _ROW_BLOCK]
        influence = log_influence[start : start + _ROW_BLOCK]
        panels = _FIRST_PANELS
        current = coarse[start : start + _ROW_BLOCK]
        while True:
            panels *= 2
            refined, _ = log_panel_integrate(log_f, rows, panels)
            judged = np.isfinite(refined) & (refined + influence >= cutoff)
            change = np.abs(refined[judged] - current[judged])
            current = refined
            if change.size == 0 or float(np.max(change)) <= tol:
                break
            if panels >= _MAX_PANELS:
                raise AccuracyError(
                    "tabulated convolution density did not converge",
                    best_estimate=float(np.max(refined[judged])),
                    achieved_tol=float(np.max(change)),
                )
        out[start : start + _ROW_BLOCK] = current
    return out


def _interpolant(grid: np.ndarray, log_values: np.ndarray) -> LogDensity:
    table = PchipInterpolator(grid, np.maximum(log_values, _LOG_FLOOR), extrapolate=False)

    def log_density(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        values = table(z)
        return np.where(np.isnan(values), -np.inf, values)

    return log_density


def nfold_tail_small(
    model: SummandModel, n: int, x: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """log P(X1 + ... + Xn > x) for n <= 4 by iterating the pair identity.

    For n >= 3 the density of the partial sum is tabulated and interpolated in log
    space (monotone cubic), then P(S_n > x) = P(S_{n-1} > x) + integral of
    f_{n-1}(s) F(x - s, inf) over [0, x].
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= 4:
        raise DomainError(f"nfold_tail_small supports n in 1..4, got {n!r}")
    law = exact_law(model)
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")
    if x <= 0.0:
        return 0.0
    if n == 1:
        return law.log_tail(x)
    if n == 2:
        return conv_tail_pair(law, law, x, spec)

    grid = _table_grid(law, x)
    table_tol = max(spec.rel_tol, 1e-10) * 10.0
    log_prev: LogDensity = law.log_density_array
    log_tail_prev = law.log_tail(x)
    for order in range(2, n + 1):
        # log_prev is the density of S_{order-1}; extend the tail to S_order
        def log_f(s: np.ndarray, log_prev: LogDensity = log_prev) -> np.ndarray:
            s = np.asarray(s, dtype=float)
            return log_prev(s) + law.log_tail_array(x - s)

        lower = 0.0 if order == 2 else float(grid[0])
        peak = locate_peak(log_f, lower, x)[0]
        piece = log_integrate(log_f, _breakpoints(lower, peak, x), spec)
        log_tail_prev = float(np.logaddexp(log_tail_prev, piece.log_value))
        if order < n:
            influence = _influence(law, grid, x, n - order)
            table = _convolve_table(
                log_prev, law, grid, table_tol, influence, spec.abs_log_floor
            )
            log_prev = _interpolant(grid, table)
    logger.debug("nfold_tail_small n=%d x=%g log_tail=%.10g", n, x, log_tail_prev)
    return min(log_tail_prev, 0.0)
