import itertools
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from core.errors import DomainError, UnsupportedError
from lighttails.compound_poisson import CompoundModel
from lighttails.convolve_asymptotics import nfold_asymptote
from lighttails.distributions import WeibullLikeModel, vanilla_weibull
from lighttails.estimators import (
    METHODS,
    RunConfig,
    ak_estimator,
    compound_tail_mc,
    cond_mc,
    crude_mc,
    efficiency_report,
    estimate,
    exact_second_moment,
    is_tilted,
    run_chunks,
    spawn_generators,
)
from lighttails.oracle import conv_tail_pair, nfold_tail_small

STANDARD = vanilla_weibull(2.0)


def _pair_tail(x: float) -> float:
    return math.sqrt(math.pi / 2.0) * x * math.exp(-x * x / 2.0) * math.erf(
        x / math.sqrt(2.0)
    ) + math.exp(-x * x)


def _within(result, exact, sigmas=5.0):
    return abs(result.estimate - exact) <= sigmas * result.std_error


def test_chunk_sizes_cover_every_sample():
    cfg = RunConfig(n_samples=1003, seed=1, n_chunks=8)
    sizes = cfg.chunk_sizes()
    assert len(sizes) == 8
    assert sum(sizes) == 1003
    assert max(sizes) - min(sizes) <= 1
    assert RunConfig(n_samples=3, seed=1, n_chunks=8).chunk_sizes() == [1, 1, 1]


@pytest.mark.parametrize(
    "kwargs",
    [{"n_samples": 0, "seed": 1}, {"n_samples": 10, "seed": -1}, {"n_samples": 10, "seed": 1, "workers": 0}],
)
def test_run_config_validation(kwargs):
    with pytest.raises(DomainError):
        RunConfig(**kwargs)


def test_spawned_streams_are_independent_and_reproducible():
    first = [g.random() for g in spawn_generators(42, 3)]
    again = [g.random() for g in spawn_generators(42, 3)]
    assert first == again
    assert len(set(first)) == 3


@pytest.mark.asyncio
async def test_run_chunks_returns_sums_in_chunk_order():
    cfg = RunConfig(n_samples=10, seed=3, n_chunks=4, workers=2)

    def factory():
        return lambda rng, size: np.full(size, 2.0)

    sums = await run_chunks(factory, cfg)
    assert [s.count for s in sums] == cfg.chunk_sizes()
    assert [s.total for s in sums] == [2.0 * n for n in cfg.chunk_sizes()]
    assert [s.total_4 for s in sums] == [16.0 * n for n in cfg.chunk_sizes()]


def test_same_seed_gives_identical_estimate():
    cfg = RunConfig(n_samples=20_000, seed=9, n_chunks=4, workers=2)
    a = cond_mc(STANDARD, 2, 3.0, cfg)
    b = cond_mc(STANDARD, 2, 3.0, RunConfig(n_samples=20_000, seed=9, n_chunks=4, workers=1))
    c = cond_mc(STANDARD, 2, 3.0, RunConfig(n_samples=20_000, seed=10, n_chunks=4))
    assert a.estimate == b.estimate
    assert a.estimate != c.estimate


def test_crude_single_summand():
    result = crude_mc(STANDARD, 1, 1.0, RunConfig(n_samples=100_000, seed=1))
    assert _within(result, math.exp(-1.0))
    assert result.ci95_low <= result.estimate <= result.ci95_high


def test_exact_and_crude_estimators_are_certain_at_zero():
    cfg = RunConfig(n_samples=1000, seed=2)
    assert crude_mc(STANDARD, 2, 0.0, cfg).estimate == 1.0
    assert cond_mc(STANDARD, 2, 0.0, cfg).estimate == 1.0


def test_crude_below_resolution_is_flagged():
    result = crude_mc(STANDARD, 2, 12.0, RunConfig(n_samples=1000, seed=4))
    assert result.estimate == 0.0
    assert result.below_resolution
    assert result.to_record()["below_resolution"] is True


@pytest.mark.parametrize("method", ["cond", "ak"])
def test_conditional_estimators_match_exact_pair(method):
    result = estimate(method, STANDARD, 2, 6.0, RunConfig(n_samples=100_000, seed=5))
    assert _within(result, _pair_tail(6.0))
    assert result.rel_error < 0.05


def test_importance_sampling_far_in_the_tail():
    result = is_tilted(STANDARD, 2, 8.0, RunConfig(n_samples=50_000, seed=6))
    exact = _pair_tail(8.0)
    assert _within(result, exact)
    assert result.rel_error < 0.05
    assert result.extras["theta"] == pytest.approx(8.0)
    assert 0.0 < result.extras["acceptance_rate"] <= 1.0
    assert result.analytic_bound is not None and result.analytic_bound > 0.0


def test_conditional_estimators_need_two_summands():
    with pytest.raises(DomainError):
        cond_mc(STANDARD, 1, 2.0, RunConfig(n_samples=10, seed=1))
    with pytest.raises(UnsupportedError):
        ak_estimator(WeibullLikeModel(alpha=1.0, beta=2.0, c=1.0, d=1.0), 2, 2.0, RunConfig(10, 1))


def test_unknown_method():
    with pytest.raises(DomainError):
        estimate("bootstrap", STANDARD, 2, 1.0, RunConfig(n_samples=10, seed=1))


def test_efficiency_report_skips_conditional_methods_for_one_summand():
    rows = efficiency_report(
        STANDARD, 1, [1.0, 2.0], RunConfig(n_samples=5_000, seed=1), methods=("crude", "cond", "ak")
    )
    assert {row.method for row in rows} == {"crude"}
    assert [row.x for row in rows] == [1.0, 2.0]
    assert rows[0].r2_proxy >= 1.0


def _slope(method: str, lo: float, hi: float) -> float:
    return (exact_second_moment(method, STANDARD, hi) - exact_second_moment(method, STANDARD, lo)) / (
        hi * hi - lo * lo
    )


@pytest.mark.parametrize("method, rate", [("crude", -0.5), ("cond", -2.0 / 3.0), ("ak", -0.75)])
def test_second_moment_decay_rates(method, rate):
    assert _slope(method, 10.0, 20.0) == pytest.approx(rate, abs=0.02)


def test_exact_second_moment_of_crude_is_the_tail():
    assert exact_second_moment("crude", STANDARD, 4.0) == conv_tail_pair(STANDARD, STANDARD, 4.0)
    with pytest.raises(DomainError):
        exact_second_moment("is", STANDARD, 4.0)


def test_monte_carlo_second_moment_matches_quadrature():
    result = cond_mc(STANDARD, 2, 3.0, RunConfig(n_samples=200_000, seed=8))
    exact = math.exp(exact_second_moment("cond", STANDARD, 3.0))
    assert abs(result.second_moment - exact) <= 5.0 * result.second_moment_std_error


def _compound_crude(mu: float, x: float, size: int, seed: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    counts = rng.poisson(mu, size)
    draws = STANDARD.sample(rng, int(counts.sum()))
    owners = np.repeat(np.arange(size), counts)
    totals = np.bincount(owners, weights=draws, minlength=size)
    p = float(np.mean(totals > x))
    return p, math.sqrt(p * (1.0 - p) / size)


@pytest.mark.slow
def test_compound_monte_carlo_agrees_with_direct_simulation():
    cm = CompoundModel(mu=2.0, severity=STANDARD)
    result = compound_tail_mc(cm, 8.0, RunConfig(n_samples=20_000, seed=12))
    direct, direct_se = _compound_crude(2.0, 8.0, 400_000, 13)
    assert abs(result.estimate - direct) <= 5.0 * math.hypot(result.std_error, direct_se)
    assert result.terms[0].method == "exact"
    assert result.terms[0].n == 1
    assert result.to_record()["terms"] == len(result.terms)


def test_conditioning_orders_the_variances():
    x = 5.0
    p = _pair_tail(x)
    variances = {
        method: math.exp(exact_second_moment(method, STANDARD, x)) - p * p
        for method in ("crude", "cond", "ak")
    }
    assert variances["ak"] < variances["cond"] < variances["crude"]


@pytest.mark.slow
def test_tilted_estimator_is_efficient_at_one_in_ten_billion():
    asym = nfold_asymptote(STANDARD.as_weibull_like(), 4)
    x = brentq(lambda t: asym.log_eval(t) - math.log(1e-10), 5.0, 30.0)
    result = is_tilted(STANDARD, 4, x, RunConfig(n_samples=100_000, seed=21))
    assert result.rel_error <= 0.05
    assert result.estimate == pytest.approx(1e-10, rel=0.2)
    assert result.second_moment <= result.analytic_bound + 3.0 * result.second_moment_std_error


def test_importance_sampling_single_summand():
    result = is_tilted(STANDARD, 1, 5.0, RunConfig(n_samples=50_000, seed=43))
    assert _within(result, math.exp(-25.0), sigmas=3.0)


@pytest.mark.slow
@pytest.mark.parametrize("beta, n, x", [(2.0, 2, 3.0), (1.5, 3, 4.0)])
def test_all_estimators_are_unbiased(beta, n, x):
    law = vanilla_weibull(beta)
    exact = math.exp(nfold_tail_small(law, n, x))
    results = {
        method: estimate(method, law, n, x, RunConfig(n_samples=1_000_000, seed=41 + i))
        for i, method in enumerate(METHODS)
    }
    for method, result in results.items():
        assert _within(result, exact, sigmas=3.0), method
    for (m1, r1), (m2, r2) in itertools.combinations(results.items(), 2):
        joint = math.hypot(r1.std_error, r2.std_error)
        assert abs(r1.estimate - r2.estimate) <= 3.0 * joint, (m1, m2)
