"""Monte Carlo estimators of P(S_n > x): crude, exponentially tilted importance
sampling, conditional Monte Carlo and the max-conditioned estimator.

Samples are split into chunks, each with its own Philox substream spawned from the
run seed. Chunks run in worker threads and are reduced in chunk order with exact
(fsum) accumulation, so a result depends on (seed, n_chunks, n_samples) only.
"""

from __future__ import annotations

import asyncio
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import poisson

from core.errors import DomainError, UnsupportedError
from lighttails.compound_poisson import CompoundModel
from lighttails.distributions import GammaWeibullModel, SummandModel, exact_law
from lighttails.oracle import conv_tail_pair
from lighttails.quadrature import QuadratureSpec, locate_peak, log_integrate
from lighttails.tilting import make_tilted_sampler

logger = logging.getLogger(__name__)

ChunkKernel = Callable[[np.random.Generator, int], np.ndarray]

METHODS = ("crude", "is", "cond", "ak")
BLOCK_SIZE = 1 << 16
_Z95 = 1.959963984540054
COMPOUND_REMAINDER = 1e-3
_COMPOUND_MAX_TERMS = 200


@dataclass(frozen=True)
class RunConfig:
    n_samples: int
    seed: int
    n_chunks: int = 8
    workers: int = 1

    def __post_init__(self) -> None:
        for name in ("n_samples", "n_chunks", "workers"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def chunk_sizes(self) -> list[int]:
        chunks = min(self.n_chunks, self.n_samples)
        base, extra = divmod(self.n_samples, chunks)
        return [base + (1 if i < extra else 0) for i in range(chunks)]


@dataclass(frozen=True)
class ChunkSums:
    count: int
    total: float
    total_sq: float
    total_4: float
    extras: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class EstimateResult:
    method: str
    n: int
    x: float
    estimate: float
    std_error: float
    rel_error: float
    n_samples: int
    second_moment: float
    second_moment_std_error: float
    ci95_low: float
    ci95_high: float
    seed: int
    analytic_bound: Optional[float] = None
    below_resolution: bool = False
    extras: Mapping[str, float] = field(default_factory=dict)

    @property
    def log10_estimate(self) -> float:
        return math.log10(self.estimate) if self.estimate > 0.0 else -math.inf

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "method": self.method,
            "n": self.n,
            "x": self.x,
            "estimate": self.estimate,
            "log10_estimate": self.log10_estimate,
            "std_error": self.std_error,
            "rel_error": self.rel_error,
            "n_samples": self.n_samples,
            "seed": self.seed,
        }
        if self.analytic_bound is not None:
            record["analytic_bound"] = self.analytic_bound
        if self.below_resolution:
            record["below_resolution"] = True
        record.update(self.extras)
        return record


def spawn_generators(seed: int, n_chunks: int) -> list[np.random.Generator]:
    """Independent Philox streams, one per chunk."""
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def _summarise(kernel: ChunkKernel, rng: np.random.Generator, size: int) -> ChunkSums:
    partial: list[tuple[float, float, float]] = []
    done = 0
    while done < size:
        block = min(BLOCK_SIZE, size - done)
        z = np.asarray(kernel(rng, block), dtype=float)
        sq = z * z
        partial.append((math.fsum(z), math.fsum(sq), math.fsum(sq * sq)))
        done += block
    return ChunkSums(
        count=size,
        total=math.fsum(p[0] for p in partial),
        total_sq=math.fsum(p[1] for p in partial),
        total_4=math.fsum(p[2] for p in partial),
    )


async def run_chunks(
    kernel_factory: Callable[[], ChunkKernel], cfg: RunConfig
) -> list[ChunkSums]:
    """Run every chunk in a worker thread and return the sums in chunk order.

    ``kernel_factory`` is called once per chunk so that chunks never share
    mutable sampler state.
    """
    gate = asyncio.Semaphore(cfg.workers)
    generators = spawn_generators(cfg.seed, len(cfg.chunk_sizes()))

    async def one(rng: np.random.Generator, size: int) -> ChunkSums:
        async with gate:
            return await asyncio.to_thread(_summarise, kernel_factory(), rng, size)

    return list(
        await asyncio.gather(*(one(rng, size) for rng, size in zip(generators, cfg.chunk_sizes())))
    )


def _reduce(method: str, n: int, x: float, cfg: RunConfig, sums: Sequence[ChunkSums]) -> EstimateResult:
    count = sum(s.count for s in sums)
    estimate = math.fsum(s.total for s in sums) / count
    second = math.fsum(s.total_sq for s in sums) / count
    fourth = math.fsum(s.total_4 for s in sums) / count
    std_error = math.sqrt(max(second - estimate * estimate, 0.0) / count)
    second_se = math.sqrt(max(fourth - second * second, 0.0) / count)
    return EstimateResult(
        method=method,
        n=n,
        x=x,
        estimate=estimate,
        std_error=std_error,
        rel_error=std_error / estimate if estimate > 0.0 else math.inf,
        n_samples=count,
        second_moment=second,
        second_moment_std_error=second_se,
        ci95_low=min(max(estimate - _Z95 * std_error, 0.0), 1.0),
        ci95_high=min(max(estimate + _Z95 * std_error, 0.0), 1.0),
        seed=cfg.seed,
        below_resolution=estimate == 0.0,
    )


def _execute(
    method: str, n: int, x: float, factory: Callable[[], ChunkKernel], cfg: RunConfig
) -> EstimateResult:
    sums = asyncio.run(run_chunks(factory, cfg))
    result = _reduce(method, n, x, cfg, sums)
    if result.below_resolution:
        logger.warning(
            "%s estimate at x=%g is zero after %d samples; below resolution",
            method,
            x,
            result.n_samples,
        )
    logger.info(
        "%s n=%d x=%g estimate=%.6g rel_error=%.3g",
        method,
        n,
        x,
        result.estimate,
        result.rel_error,
    )
    return result


def _check_n(n: int, minimum: int) -> None:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")


def _check_x(x: float) -> None:
    if not math.isfinite(x):
        raise DomainError(f"x must be finite, got {x!r}")


def crude_mc(model: SummandModel, n: int, x: float, cfg: RunConfig) -> EstimateResult:
    """Z = 1{S_n > x}."""
    _check_n(n, 1)
    _check_x(x)
    law = exact_law(model)

    def factory() -> ChunkKernel:
        def kernel(rng: np.random.Generator, size: int) -> np.ndarray:
            sums = law.sample(rng, (size, n)).sum(axis=1)
            return (sums > x).astype(float)

        return kernel

    return _execute("crude", n, x, factory, cfg)


def is_tilted(
    model: SummandModel, n: int, x: float, cfg: RunConfig, *, center: str = "hazard"
) -> EstimateResult:
    """Z = 1{S_n > x} F^[theta]**n exp(-theta S_n) with S_n drawn from the tilted law."""
    _check_n(n, 1)
    _check_x(x)
    law = exact_law(model)
    sampler = make_tilted_sampler(law, x, n, center=center)
    theta = sampler.theta
    log_weight = n * sampler.log_mgf
    clones: list[Any] = []

    def factory() -> ChunkKernel:
        local = sampler.clone()
        clones.append(local)

        def kernel(rng: np.random.Generator, size: int) -> np.ndarray:
            sums = local.sample(rng, size * n).reshape(size, n).sum(axis=1)
            return np.where(sums > x, np.exp(log_weight - theta * sums), 0.0)

        return kernel

    result = _execute("is", n, x, factory, cfg)
    proposed = sum(c.propose_count for c in clones)
    accepted = sum(c.accept_count for c in clones)
    return replace(
        result,
        analytic_bound=math.exp(log_weight - theta * x) * result.estimate,
        extras={
            "theta": theta,
            "acceptance_rate": accepted / proposed if proposed else math.nan,
            "expected_acceptance": sampler.expected_acceptance,
        },
    )


def _conditional_law(model: SummandModel, n: int) -> GammaWeibullModel:
    _check_n(n, 2)
    try:
        return exact_law(model)
    except UnsupportedError as exc:
        raise UnsupportedError(
            "conditional estimators need the exact tail of the summand law"
        ) from exc


def cond_mc(model: SummandModel, n: int, x: float, cfg: RunConfig) -> EstimateResult:
    """Z = F(x - S_{n-1}, inf)."""
    law = _conditional_law(model, n)
    _check_x(x)

    def factory() -> ChunkKernel:
        def kernel(rng: np.random.Generator, size: int) -> np.ndarray:
            partial = law.sample(rng, (size, n - 1)).sum(axis=1)
            return law.tail_array(x - partial)

        return kernel

    return _execute("cond", n, x, factory, cfg)


def ak_estimator(model: SummandModel, n: int, x: float, cfg: RunConfig) -> EstimateResult:
    """Z = n F(max(M_{n-1}, x - S_{n-1}), inf)."""
    law = _conditional_law(model, n)
    _check_x(x)

    def factory() -> ChunkKernel:
        def kernel(rng: np.random.Generator, size: int) -> np.ndarray:
            draws = law.sample(rng, (size, n - 1))
            point = np.maximum(draws.max(axis=1), x - draws.sum(axis=1))
            return n * law.tail_array(point)

        return kernel

    return _execute("ak", n, x, factory, cfg)


ESTIMATORS: dict[str, Callable[[SummandModel, int, float, RunConfig], EstimateResult]] = {
    "crude": crude_mc,
    "is": is_tilted,
    "cond": cond_mc,
    "ak": ak_estimator,
}


def estimate(method: str, model: SummandModel, n: int, x: float, cfg: RunConfig) -> EstimateResult:
    try:
        runner = ESTIMATORS[method]
    except KeyError:
        raise DomainError(
            f"unknown method {method!r}; expected one of {', '.join(METHODS)}"
        ) from None
    return runner(model, n, x, cfg)


@dataclass(frozen=True)
class EfficiencyRow:
    method: str
    x: float
    estimate: float
    rel_error: float
    r2_proxy: float
    log_efficiency: float

    def to_record(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "x": self.x,
            "estimate": self.estimate,
            "rel_error": self.rel_error,
            "r2": self.r2_proxy,
            "log_efficiency": self.log_efficiency,
        }


def _efficiency_row(result: EstimateResult) -> EfficiencyRow:
    est, second = result.estimate, result.second_moment
    if est > 0.0:
        r2 = second / (est * est)
        log_eff = math.log(second) / (2.0 * math.log(est)) if 0.0 < est < 1.0 else math.nan
    else:
        r2, log_eff = math.inf, math.nan
    return EfficiencyRow(
        method=result.method,
        x=result.x,
        estimate=est,
        rel_error=result.rel_error,
        r2_proxy=r2,
        log_efficiency=log_eff,
    )


def efficiency_report(
    model: SummandModel,
    n: int,
    x_grid: Sequence[float],
    cfg: RunConfig,
    methods: Sequence[str] = METHODS,
) -> list[EfficiencyRow]:
    """Estimate, relative error, E Z**2 / P**2 and log E Z**2 / (2 log P) per method and x."""
    rows = []
    for method in methods:
        if method in ("cond", "ak") and n < 2:
            logger.warning("skipping %s for n=1", method)
            continue
        for x in x_grid:
            rows.append(_efficiency_row(estimate(method, model, n, float(x), cfg)))
    return rows


def exact_second_moment(
    method: str, model: SummandModel, x: float, spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """log E Z**2 for n = 2 by quadrature.

    crude: P(S_2 > x); cond: F(x) + integral_0^x f(z) F(x-z)**2;
    ak: 4 [integral_0^(x/2) f(z) F(x-z)**2 + F(x/2)**3 / 3], F being the tail.
    """
    law = exact_law(model)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    if method == "crude":
        return conv_tail_pair(law, law, x, spec)
    if method not in ("cond", "ak"):
        raise DomainError(f"exact second moments exist for crude, cond, ak; got {method!r}")

    def log_f(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return law.log_density_array(z) + 2.0 * law.log_tail_array(x - z)

    upper = x if method == "cond" else 0.5 * x
    peak = locate_peak(log_f, 0.0, upper)[0]
    points = {0.0, upper, peak}
    points.update(peak * 10.0 ** (-j) for j in range(1, 9))
    points.update(np.linspace(0.0, upper, 9).tolist())
    integral = log_integrate(log_f, sorted(points), spec).log_value
    if method == "cond":
        return float(np.logaddexp(law.log_tail(x), integral))
    boundary = 3.0 * law.log_tail(0.5 * x) - math.log(3.0)
    return math.log(4.0) + float(np.logaddexp(integral, boundary))


@dataclass(frozen=True)
class CompoundTerm:
    n: int
    weight: float
    estimate: float
    std_error: float
    method: str


@dataclass(frozen=True)
class CompoundEstimate:
    estimate: float
    std_error: float
    rel_error: float
    terms: tuple[CompoundTerm, ...]

    def to_record(self) -> dict[str, Any]:
        return {
            "estimate": self.estimate,
            "log10_estimate": math.log10(self.estimate) if self.estimate > 0 else -math.inf,
            "std_error": self.std_error,
            "rel_error": self.rel_error,
            "terms": len(self.terms),
        }


def _term_seed(seed: int, term: int) -> int:
    return int(np.random.SeedSequence([seed, term]).generate_state(1, np.uint64)[0])


def _term_method(law: GammaWeibullModel, n: int, x: float) -> str:
    if law.beta > 1.0 and law.gamma_shape >= 1.0 and x / n > law.mean:
        return "is"
    return "cond"


def compound_tail_mc(cm: CompoundModel, x: float, cfg: RunConfig) -> CompoundEstimate:
    """P(S_N > x) as sum over n of Pois(n; mu) P^(S_n > x), one estimator per term.

    n = 1 uses the exact tail; later terms use tilted IS above the mean and
    conditional Monte Carlo otherwise. Terms stop once P(N > n) falls below
    1e-3 of the running estimate.
    """
    law = exact_law(cm.severity)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"x must be positive and finite, got {x!r}")
    terms: list[CompoundTerm] = []
    values: list[float] = []
    variances: list[float] = []
    for n in range(1, _COMPOUND_MAX_TERMS + 1):
        weight = float(poisson.pmf(n, cm.mu))
        if n == 1:
            value, se, method = law.tail(x), 0.0, "exact"
        else:
            method = _term_method(law, n, x)
            result = estimate(method, law, n, x, replace(cfg, seed=_term_seed(cfg.seed, n)))
            value, se = result.estimate, result.std_error
        terms.append(CompoundTerm(n=n, weight=weight, estimate=value, std_error=se, method=method))
        values.append(weight * value)
        variances.append((weight * se) ** 2)
        total = math.fsum(values)
        if total > 0.0 and float(poisson.sf(n, cm.mu)) < COMPOUND_REMAINDER * total:
            break
    else:
        logger.warning("compound series truncated at %d terms", _COMPOUND_MAX_TERMS)
    total = math.fsum(values)
    std_error = math.sqrt(math.fsum(variances))
    return CompoundEstimate(
        estimate=total,
        std_error=std_error,
        rel_error=std_error / total if total > 0.0 else math.inf,
        terms=tuple(terms),
    )
