import math

import numpy as np
import pytest

from core.errors import DomainError, NoSolutionError, UnsupportedError
from lighttails import special
from lighttails.convolve_asymptotics import (
    beta_norm_log_bound,
    bkr_convolve_at,
    bkr_split,
    exp_class_discrepancy,
    exp_class_tail,
    nfold_asymptote,
    nfold_by_recursion,
    pair_constants,
    pair_density_asymptote,
    pair_tail_asymptote,
)
from lighttails.distributions import (
    BkrModel,
    GammaWeibullModel,
    WeibullLikeModel,
    vanilla_weibull,
)
from lighttails.oracle import conv_tail_pair

STANDARD = WeibullLikeModel(alpha=0.0, beta=2.0, c=1.0, d=2.0)


def _power_model(beta: float, c: float = 1.0) -> BkrModel:
    return BkrModel(
        psi=lambda z: c * z**beta,
        lam=lambda z: beta * c * z ** (beta - 1.0),
        lam_prime=lambda z: beta * (beta - 1.0) * c * z ** (beta - 2.0),
        gamma_flat=lambda z: 1.0,
    )


def test_symmetric_pair_constants():
    consts = pair_constants(STANDARD, STANDARD)
    assert consts.theta1 == pytest.approx(0.5)
    assert consts.theta2 == pytest.approx(0.5)
    assert consts.eta == pytest.approx(2.0)
    assert consts.kappa == pytest.approx(1.0)
    assert consts.c == pytest.approx(0.5)
    assert consts.k == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-12)
    assert consts.gamma_exp == pytest.approx(1.0)


def test_split_fractions_and_rate_over_random_parameters():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        beta = rng.uniform(1.01, 5.0)
        c1, c2 = rng.uniform(0.1, 10.0, size=2)
        consts = pair_constants(
            WeibullLikeModel(0.0, beta, c1, 1.0), WeibullLikeModel(0.0, beta, c2, 1.0)
        )
        assert consts.theta1 + consts.theta2 == pytest.approx(1.0, abs=1e-12)
        assert consts.c < min(c1, c2)


def test_pair_asymptote_is_symmetric():
    m1 = WeibullLikeModel(alpha=0.5, beta=2.5, c=1.0, d=3.0)
    m2 = WeibullLikeModel(alpha=-0.2, beta=2.5, c=2.0, d=0.7)
    assert pair_tail_asymptote(m1, m2) == pair_tail_asymptote(m2, m1)


def test_vanilla_pair_rate_halves_per_remark():
    for beta in (1.5, 2.0, 3.0):
        model = WeibullLikeModel(0.0, beta, 1.0, beta)
        assert pair_tail_asymptote(model, model).c == pytest.approx(0.5 ** (beta - 1.0))


def test_density_asymptote_clause():
    tail = pair_tail_asymptote(STANDARD, STANDARD)
    dens = pair_density_asymptote(STANDARD, STANDARD)
    assert dens.k == pytest.approx(2.0 * 0.5 * tail.k)
    assert dens.p == pytest.approx(tail.p + 1.0)


def test_mismatched_beta_is_unsupported():
    with pytest.raises(UnsupportedError):
        pair_constants(STANDARD, WeibullLikeModel(0.0, 3.0, 1.0, 3.0))


def test_nfold_small_cases():
    one = nfold_asymptote(STANDARD, 1)
    assert one.k == pytest.approx(STANDARD.d / (STANDARD.beta * STANDARD.c))
    two = nfold_asymptote(STANDARD, 2)
    assert two.k == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-12)
    assert (two.p, two.c) == (pytest.approx(1.0), pytest.approx(0.5))
    three = nfold_asymptote(STANDARD, 3)
    assert three.c == pytest.approx(1.0 / 3.0)
    assert three.p == pytest.approx(2.0)
    with pytest.raises(DomainError):
        nfold_asymptote(STANDARD, 0)


@pytest.mark.parametrize(
    "alpha, beta, c, d",
    [(0.0, 1.5, 1.0, 1.5), (0.0, 2.0, 1.0, 2.0), (1.0, 3.0, 2.0, 0.7), (0.5, 1.5, 2.0, 1.0)],
)
def test_closed_form_matches_recursion(alpha, beta, c, d):
    model = WeibullLikeModel(alpha=alpha, beta=beta, c=c, d=d)
    for n in range(2, 9):
        closed = nfold_asymptote(model, n)
        recursive = nfold_by_recursion(model, n)
        assert recursive.log_k == pytest.approx(closed.log_k, rel=1e-10, abs=1e-10)
        assert recursive.p == pytest.approx(closed.p, rel=1e-10)
        assert recursive.c == pytest.approx(closed.c, rel=1e-10)


def test_asymptote_ratio_to_oracle_vanilla_normal_like():
    asym = nfold_asymptote(STANDARD, 2)
    law = vanilla_weibull(2.0)
    for x in (4.0, 6.0, 8.0):
        ratio = math.exp(asym.log_eval(x) - conv_tail_pair(law, law, x))
        assert 0.9 <= ratio <= 1.1
    ratio = math.exp(asym.log_eval(8.0) - conv_tail_pair(law, law, 8.0))
    assert abs(ratio - 1.0) <= 1e-3


def test_asymptote_ratio_approaches_one_along_grid():
    model = WeibullLikeModel(0.0, 1.5, 1.0, 1.5)
    law = vanilla_weibull(1.5)
    asym = nfold_asymptote(model, 2)
    gaps = [
        abs(math.exp(asym.log_eval(x) - conv_tail_pair(law, law, x)) - 1.0)
        for x in np.geomspace(4.0, 32.0, 4)
    ]
    assert gaps[-1] <= gaps[-2] <= gaps[-3]


def test_split_of_identical_models_is_half():
    split = bkr_split(_power_model(2.0), _power_model(2.0), 10.0)
    assert split.q1 == pytest.approx(5.0, rel=1e-10)
    assert split.q1 + split.q2 == pytest.approx(10.0, rel=1e-12)


def test_mixed_beta_split_follows_power_law():
    split = bkr_split(_power_model(3.0), _power_model(2.0), 1e4)
    assert split.q1 == pytest.approx(math.sqrt(2.0 / 3.0) * 100.0, rel=0.05)
    assert split.residual <= 1e-10


def test_same_beta_split_reproduces_theta():
    m1 = WeibullLikeModel(0.0, 2.0, 1.0, 2.0)
    m2 = WeibullLikeModel(0.0, 2.0, 2.0, 4.0)
    split = bkr_split(BkrModel.from_weibull_like(m1), BkrModel.from_weibull_like(m2), 7.0)
    assert split.q1 / 7.0 == pytest.approx(pair_constants(m1, m2).theta1, rel=1e-10)


def test_split_route_matches_pair_theorem():
    m1 = WeibullLikeModel(0.3, 2.0, 1.0, 1.5)
    m2 = WeibullLikeModel(0.0, 2.0, 2.0, 0.8)
    point = bkr_convolve_at(BkrModel.from_weibull_like(m1), BkrModel.from_weibull_like(m2), 12.0)
    assert point.log_tail == pytest.approx(pair_tail_asymptote(m1, m2).log_eval(12.0), abs=1e-6)


def test_symmetric_quadratic_convolution():
    half = BkrModel(
        psi=lambda z: 0.5 * z * z,
        lam=lambda z: z,
        lam_prime=lambda z: 1.0,
        gamma_flat=lambda z: 1.0,
    )
    point = bkr_convolve_at(half, half, 6.0)
    assert point.psi_x == pytest.approx(9.0)
    assert point.lambda_x == pytest.approx(3.0)
    assert bkr_convolve_at(half, half, 12.0).lambda_x > point.lambda_x


def test_split_fails_below_joint_support():
    shifted = BkrModel(
        psi=lambda z: z * z,
        lam=lambda z: 2.0 * z,
        lam_prime=lambda z: 2.0,
        gamma_flat=lambda z: 1.0,
        support_low=5.0,
    )
    with pytest.raises(NoSolutionError):
        bkr_split(_power_model(2.0), shifted, 3.0)


def test_exp_class_two_exponentials():
    terms = [(lambda x: 1.0, 1.0), (lambda x: 1.0, 1.0)]
    assert exp_class_tail(terms, 1.0, 20.0) == pytest.approx(-20.0 + math.log(20.0), rel=1e-12)
    with pytest.raises(DomainError):
        exp_class_tail([], 1.0, 20.0)


def _gamma_slowly_varying(shape: float):
    return lambda x: math.exp(special.log_gamma_q(shape, x) + x - (shape - 1.0) * math.log(x))


def test_exp_class_constant_against_exact_gamma_sum():
    terms = [(_gamma_slowly_varying(2.0), 2.0), (_gamma_slowly_varying(3.0), 3.0)]
    errors = []
    discrepancy = exp_class_discrepancy([2.0, 3.0])
    for x in (40.0, 80.0, 160.0):
        ratio = math.exp(exp_class_tail(terms, 1.0, x) - special.log_gamma_q(5.0, x))
        errors.append(abs(ratio - 1.0))
    message = f"ratio errors {errors}, prod Gamma discrepancy {discrepancy:g}"
    assert errors[0] <= 0.03, message
    assert errors[1] <= 0.02, message
    assert errors[2] < errors[1] < errors[0], message
    assert discrepancy == pytest.approx(2.0)


def test_beta_norm_bound_single_summand_is_exact_tail():
    terms = [(lambda x: 1.0, 1.0)]
    assert beta_norm_log_bound(terms, 1.0, 2.0, 1, 3.0) == pytest.approx(-9.0, rel=1e-12)


def test_beta_norm_bound_dominates_oracle_and_has_leading_term():
    terms = [(lambda x: 1.0, 1.0)] * 2
    law = vanilla_weibull(2.0)
    for x in (3.0, 4.0, 6.0):
        assert beta_norm_log_bound(terms, 1.0, 2.0, 2, x) >= conv_tail_pair(law, law, x)
    x = 50.0
    assert beta_norm_log_bound(terms, 1.0, 2.0, 2, x) / (-2.0 * (x / 2.0) ** 2) == pytest.approx(
        1.0, abs=0.01
    )


@pytest.mark.parametrize("x", [1.0, 2.0, 3.0])
def test_beta_norm_bound_exact_laws_hold_at_moderate_x(x):
    law = vanilla_weibull(2.0)
    bound = beta_norm_log_bound([law, law], 1.0, 2.0, 2, x)
    assert bound == pytest.approx(-x * x / 2.0 + math.log1p(x * x / 2.0), rel=1e-10)
    assert conv_tail_pair(law, law, x) <= bound


def test_beta_norm_bound_general_terms_dominate_once_asymptotic():
    terms = [(lambda x: 1.0, 1.0)] * 2
    law = vanilla_weibull(2.0)
    for x in (2.0, 3.0):
        assert conv_tail_pair(law, law, x) <= beta_norm_log_bound(terms, 1.0, 2.0, 2, x)
    with pytest.raises(UnsupportedError):
        beta_norm_log_bound(terms, 1.0, 2.0, 2, 1.0)


def test_beta_norm_bound_rejects_mixed_or_mismatched_laws():
    law = vanilla_weibull(2.0)
    with pytest.raises(DomainError):
        beta_norm_log_bound([law, (lambda x: 1.0, 2.0)], 1.0, 2.0, 2, 3.0)
    with pytest.raises(DomainError):
        beta_norm_log_bound([law, GammaWeibullModel(k=2.0, beta=2.0, gamma_shape=2.0)], 1.0, 2.0, 2, 3.0)
