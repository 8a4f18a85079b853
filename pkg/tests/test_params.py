import math
from statistics import NormalDist

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from lltrace.channels import FINGERPRINTING_ATTACKS, AttackName, build_attack
from lltrace.params import (
    asymptotic_length,
    binary_entropy,
    catch_all_gamma,
    deterministic_joint_params,
    joint_params,
    simple_params,
    universal_design,
)
from lltrace.probability import JOINT, SIMPLE, optimal_bias, position_model

LN2 = math.log(2)


def model_for(name, c, mode=SIMPLE, p=None):
    ch = build_attack(name, c)
    return position_model(c, p if p is not None else optimal_bias(c, ch, mode), ch)


def test_gamma_and_eta_hand_values():
    params = simple_params(3, 1000, 0.01, 0.5, model_for("interleaving", 3))
    assert params.gamma == pytest.approx(math.log(2) / math.log(1e5), abs=1e-12)
    assert params.gamma == pytest.approx(0.060206, abs=1e-6)
    assert params.eta == pytest.approx(10.8198, abs=1e-4)
    assert isinstance(params.ell, int) and params.ell >= 1


def test_weak_false_negative_budget_limit():
    params = simple_params(3, 1000, 0.05, 1 - 1e-9, model_for("all1", 3))
    assert params.gamma < 1e-9
    assert params.eta == pytest.approx(math.log(1000 / 0.05), rel=1e-8)


@given(
    st.sampled_from(FINGERPRINTING_ATTACKS),
    st.integers(2, 12),
    st.integers(10, 10**8),
    st.floats(1e-6, 0.5),
    st.floats(1e-6, 0.99),
)
def test_eta_is_one_minus_gamma_times_log(name, c, n, e1, e2):
    assume(math.log(1 / e2) < 0.9 * math.log(n / e1))
    params = simple_params(c, n, e1, e2, model_for(name, c))
    assert params.eta / math.log(n / e1) == pytest.approx(1 - params.gamma, rel=1e-12)


budgets = dict(
    name=st.sampled_from(FINGERPRINTING_ATTACKS),
    c=st.integers(2, 10),
    n=st.integers(10, 10**6),
    e1=st.floats(1e-4, 0.3),
    e2=st.floats(1e-4, 0.3),
    factor=st.floats(1.0, 3.0),
)


@given(**budgets)
def test_length_nonincreasing_in_eps2(name, c, n, e1, e2, factor):
    assume(math.log(1 / e2) < 0.95 * math.log(n / e1))
    m = model_for(name, c)
    assert simple_params(c, n, e1, min(e2 * factor, 0.9), m).ell <= simple_params(c, n, e1, e2, m).ell


@given(**budgets)
def test_length_nonincreasing_in_eps1(name, c, n, e1, e2, factor):
    looser = min(e1 * factor, 0.9)
    assume(math.log(1 / e2) < 0.95 * math.log(n / looser))
    m = model_for(name, c)
    assert simple_params(c, n, looser, e2, m).ell <= simple_params(c, n, e1, e2, m).ell


def test_all1_length_scaling_at_large_n():
    c = 100
    params = simple_params(c, 10**9, 0.01, 0.01, model_for("all1", c))
    assert params.ell / (c * math.log(1e9)) == pytest.approx(1 / LN2**2, rel=0.15)


@given(st.sampled_from(FINGERPRINTING_ATTACKS), st.integers(10, 10**6), st.floats(0.001, 0.3), st.floats(0.001, 0.3))
def test_joint_with_one_colluder_is_simple(name, n, e1, e2):
    assume(math.log(1 / e2) < 0.95 * math.log(n / e1))
    m = model_for(name, 1, p=0.5)
    assert joint_params(1, n, e1, e2, m) == simple_params(1, n, e1, e2, m)


def test_joint_all1_length_near_capacity():
    c, n = 3, 100
    params = joint_params(c, n, 0.05, 0.05, model_for("all1", c, JOINT))
    assert params.ell / (c * math.log2(n)) == pytest.approx(1.0, rel=0.25)


def test_joint_interleaving_length_small_gamma():
    c, n = 10, 10**4
    params = joint_params(c, n, 0.05, 0.99, model_for("interleaving", c, JOINT))
    assert params.gamma < 1e-3
    assert params.ell == pytest.approx(2 * c * c * math.log(n), rel=0.20)


@pytest.mark.parametrize("c, n, eps1, ell", [(2, 100, 0.01, 20), (1, 2, 0.5, 2), (2, 50, 0.01, 18)])
def test_deterministic_lengths(c, n, eps1, ell):
    assert deterministic_joint_params(c, n, eps1).ell == ell


@given(st.integers(1, 6), st.integers(2, 10**6), st.floats(1e-9, 0.99))
def test_deterministic_threshold_within_one_step(c, n, eps1):
    params = deterministic_joint_params(c, n, eps1)
    assert 0 <= params.ell * LN2 - params.eta < LN2 + 1e-9
    assert params.gamma == 0 and params.eps2 == 0


def test_catch_all_gamma():
    markov_gamma = simple_params(1, 1000, 0.1, 0.2, model_for("all1", 1, p=0.5)).gamma
    assert catch_all_gamma(1, 1000, 0.1, 0.2) == pytest.approx(markov_gamma, rel=1e-12)
    assert catch_all_gamma(10, 1000, 0.1, 0.1) == pytest.approx(0.5, abs=1e-12)
    assert catch_all_gamma(3, 1000, 0.1, 3) == 0.0
    with pytest.raises(ValueError):
        simple_params(3, 1000, 0.1, 3.0, model_for("all1", 3))


def test_catch_all_design_is_flagged():
    m = model_for("all1", 5)
    plain = simple_params(5, 1000, 0.1, 0.1, m)
    heuristic = simple_params(5, 1000, 0.1, 0.1, m, catch_all=True)
    assert heuristic.meta["heuristic"]
    assert heuristic.ell > plain.ell and heuristic.eps2 == 0.1


@pytest.mark.parametrize(
    "attack, mode, c, n, value",
    [
        ("interleaving", SIMPLE, 10, 1e6, 2763.1),
        ("coinflip", JOINT, 5, 1e6, 309.6),
        ("all1", SIMPLE, 3, 1000, 43.14),
    ],
)
def test_asymptotic_examples(attack, mode, c, n, value):
    assert asymptotic_length(attack, c, n, mode) == pytest.approx(value, abs=0.05)


def test_asymptotic_noise_models():
    n, c, r = 1e6, 10, 0.1
    assert asymptotic_length("additive", c, n, JOINT, r=r) == pytest.approx(
        c * math.log2(n) / (1 - 0.5 * binary_entropy(r))
    )
    assert asymptotic_length("dilution", c, n, SIMPLE, r=r) == pytest.approx(c * math.log(n) / LN2**2)
    with pytest.raises(ValueError):
        asymptotic_length("all1", c, n, "pairwise")


@pytest.mark.parametrize("name", list(FINGERPRINTING_ATTACKS))
@pytest.mark.parametrize("mode", [SIMPLE, JOINT])
def test_ratio_to_asymptote_approaches_one(name, mode):
    c, eps = 10, 1e-4
    m = model_for(name, c, mode)
    design = simple_params if mode == SIMPLE else joint_params
    ratios = [design(c, n, eps, eps, m).ell / asymptotic_length(name, c, n, mode) for n in (10**6, 10**9, 10**12)]
    assert all(abs(a - 1) > abs(b - 1) for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("name", list(FINGERPRINTING_ATTACKS))
def test_simple_ratio_within_ten_percent_at_large_n(name):
    c, eps, n = 10, 1e-4, 10**12
    params = simple_params(c, n, eps, eps, model_for(name, c))
    assert params.ell / asymptotic_length(name, c, n, SIMPLE) == pytest.approx(1.0, rel=0.10)


def test_universal_design_matches_closed_form():
    c, n, eps = 10, 10**4, 0.05
    params = universal_design(c, n, eps, eps)
    g = params.gamma
    closed = 2 * c * c * math.log(n / eps) * (1 + math.sqrt(g) - g) / (1 - math.sqrt(g))
    assert params.ell == pytest.approx(closed, rel=0.10)
    assert params.meta["threshold"] == "normalized"
    assert params.eta == pytest.approx(NormalDist().inv_cdf(1 - eps / n), abs=1e-9)


@pytest.mark.parametrize("c", [10, 30])
def test_universal_design_small_gamma_limit(c):
    ratios = [universal_design(c, n, 0.5, 1 - 1e-12).ell / (2 * c * c * math.log(n)) for n in (10**6, 10**12, 10**24, 10**48)]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] - 1 < 0.01 + 1 / c**2


def test_universal_design_single_colluder():
    params = universal_design(1, 1000, 0.1, 0.1)
    identity = build_attack(AttackName.INTERLEAVING, 1)
    assert params.ell == simple_params(1, 1000, 0.1, 0.1, position_model(1, 0.5, identity)).ell


@pytest.mark.parametrize("e1, e2", [(0.0, 0.1), (0.1, 1.0), (1.5, 0.1)])
def test_budget_validation(e1, e2):
    with pytest.raises(ValueError):
        simple_params(3, 100, e1, e2, model_for("all1", 3))


def test_incompatible_budgets():
    # ln(1/eps2) >= ln(n/eps1) leaves no room for a threshold
    with pytest.raises(ValueError):
        simple_params(3, 10, 0.5, 1e-3, model_for("all1", 3))
