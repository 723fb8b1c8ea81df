import math

import pytest
from scipy.optimize import brentq

from core.errors import DomainError, NoSolutionError, UnsupportedError
from lighttails import special
from lighttails.compound_poisson import (
    CompoundModel,
    esscher_approximation,
    esscher_tail,
    lambert_w0,
    log_asym_tail,
    saddlepoint_scale,
)
from lighttails.distributions import GammaWeibullModel, WeibullLikeModel, vanilla_weibull
from lighttails.estimators import RunConfig, compound_tail_mc

EXPONENTIAL = GammaWeibullModel(k=1.0, beta=1.0, gamma_shape=1.0)


def _exponential_compound_tail(mu: float, x: float, terms: int = 200) -> float:
    log_terms = [
        -mu + n * math.log(mu) - math.lgamma(n + 1) + special.log_gamma_q(float(n), x)
        for n in range(1, terms)
    ]
    top = max(log_terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in log_terms))


def test_lambert_w_reference_values():
    assert lambert_w0(1.0) == pytest.approx(0.5671432904097838, rel=1e-14)
    assert lambert_w0(math.e) == pytest.approx(1.0, rel=1e-14)
    assert lambert_w0(0.0) == 0.0
    assert lambert_w0(-math.exp(-1.0)) == -1.0
    assert lambert_w0(math.inf) == math.inf


@pytest.mark.parametrize("v", [-0.367, -0.3, -0.1, 1e-8, 0.5, 10.0, 1e6, 1e300])
def test_lambert_w_identity(v):
    w = lambert_w0(v)
    assert w >= -1.0
    assert w * math.exp(w) == pytest.approx(v, rel=1e-12)


def test_lambert_w_rejects_points_left_of_branch():
    with pytest.raises(DomainError):
        lambert_w0(-0.5)
    with pytest.raises(DomainError):
        lambert_w0(math.nan)


def test_saddlepoint_reference_case():
    solution = saddlepoint_scale(1.0, 2.0, 10.0)
    assert solution.c1 == pytest.approx(2.0 * math.sqrt(math.pi))
    assert solution.y == pytest.approx(1.00921, abs=1e-5)
    assert solution.theta == pytest.approx(2.0 * solution.y)


@pytest.mark.parametrize("beta", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("x", [5.0, 10.0, 100.0, 1e4])
def test_saddlepoint_equation_residual(beta, x):
    assert saddlepoint_scale(2.0, beta, x).residual <= 1e-10


def test_saddlepoint_argument_checks():
    with pytest.raises(DomainError):
        saddlepoint_scale(0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        saddlepoint_scale(1.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        saddlepoint_scale(1.0, 2.0, -1.0)


def test_esscher_against_exponential_series():
    cm = CompoundModel(mu=1.0, severity=EXPONENTIAL)
    exact = _exponential_compound_tail(1.0, 20.0)
    result = esscher_approximation(cm, 20.0)
    assert math.exp(result.log_value - exact) == pytest.approx(1.0, abs=0.1)
    assert 0.0 < result.theta < 1.0
    assert result.ell == pytest.approx(result.theta * result.sigma_c)
    assert esscher_tail(cm, 20.0) == result.log_value


def test_esscher_needs_x_above_compound_mean():
    cm = CompoundModel(mu=2.0, severity=vanilla_weibull(2.0))
    with pytest.raises(NoSolutionError) as excinfo:
        esscher_approximation(cm, 1.0)
    assert excinfo.value.feasible[0] == pytest.approx(math.sqrt(math.pi))


def test_log_asymptote_tracks_esscher_on_log_scale():
    cm = CompoundModel(mu=1.0, severity=vanilla_weibull(2.0))
    essch = esscher_tail(cm, 20.0)
    asym = log_asym_tail(cm, 20.0)
    assert asym == pytest.approx(essch, rel=0.1)


def test_variants_coincide_for_unit_rate():
    cm = CompoundModel(mu=1.0, severity=vanilla_weibull(2.0))
    assert log_asym_tail(cm, 15.0, "consistent") == pytest.approx(log_asym_tail(cm, 15.0))
    busy = CompoundModel(mu=3.0, severity=vanilla_weibull(2.0))
    assert log_asym_tail(busy, 15.0) == log_asym_tail(busy, 15.0, "rate-weighted")
    assert log_asym_tail(busy, 15.0, "consistent") != pytest.approx(log_asym_tail(busy, 15.0))
    with pytest.raises(DomainError):
        log_asym_tail(cm, 15.0, "other")


def test_scale_rescales_standard_severity():
    unit = CompoundModel(mu=1.0, severity=vanilla_weibull(2.0))
    scaled = CompoundModel(mu=1.0, severity=vanilla_weibull(2.0, c=4.0))
    assert log_asym_tail(scaled, 5.0) == pytest.approx(log_asym_tail(unit, 10.0))


def test_log_asymptote_needs_standard_weibull():
    cm = CompoundModel(mu=1.0, severity=GammaWeibullModel(k=1.0, beta=2.0, gamma_shape=3.0))
    with pytest.raises(UnsupportedError):
        log_asym_tail(cm, 10.0)
    skewed = CompoundModel(mu=1.0, severity=WeibullLikeModel(alpha=1.0, beta=2.0, c=1.0, d=1.0))
    with pytest.raises(UnsupportedError):
        skewed.standard_scale


def test_compound_model_checks_rate():
    with pytest.raises(DomainError):
        CompoundModel(mu=0.0, severity=EXPONENTIAL)
    record = CompoundModel(mu=2.0, severity=EXPONENTIAL).to_record()
    assert record["mu"] == 2.0
    assert record["severity"]["family"] == "gamma-weibull"


def test_displayed_form_overshoots_for_busy_rate():
    cm = CompoundModel(mu=2.0, severity=vanilla_weibull(2.0))
    assert log_asym_tail(cm, 8.0, "rate-weighted") > 0.0 > log_asym_tail(cm, 8.0)


@pytest.mark.slow
@pytest.mark.parametrize("mu, x", [(1.0, 6.0), (2.0, 8.0)])
def test_esscher_against_weibull_series(mu, x):
    cm = CompoundModel(mu=mu, severity=vanilla_weibull(2.0))
    series = compound_tail_mc(cm, x, RunConfig(n_samples=20_000, seed=31))
    assert series.rel_error < 0.05
    ratio = math.exp(esscher_tail(cm, x)) / series.estimate
    assert ratio == pytest.approx(1.0, abs=0.2)


@pytest.mark.slow
def test_log_asymptote_against_monte_carlo_far_out():
    cm = CompoundModel(mu=2.0, severity=vanilla_weibull(2.0))
    x = brentq(lambda t: esscher_tail(cm, t) - math.log(1e-5), 8.0, 16.0)
    series = compound_tail_mc(cm, x, RunConfig(n_samples=20_000, seed=37))
    assert series.rel_error < 0.05
    assert log_asym_tail(cm, x) / math.log(series.estimate) == pytest.approx(1.0, abs=0.15)
