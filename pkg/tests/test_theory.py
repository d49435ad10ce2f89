import json
import math

import numpy as np
import pytest
from scipy import integrate, special

from dupdel.errors import QuadratureError, ValidationError
from dupdel.theory import (
    K_CAP,
    Method,
    Regime,
    degree_dist_critical,
    degree_dist_hypergeometric,
    degree_dist_subcritical,
    degree_dist_supercritical,
    degree_distribution,
    parse_table_csv,
    partial_sum_identity_residual,
    partial_sum_identity_residuals,
    recursion_residual,
    recursion_residuals,
    regime_params,
    table_to_csv,
    table_to_json,
    tail_rule_K,
)
from dupdel.theory.distribution import asymptotic_tail_bound

GRID = [0.25, 0.4, 0.5, 0.6, 0.75]

# 30-digit mpmath quadrature of the untransformed integrals, rounded to 17 digits
ORACLE = {
    0.75: {1: 0.15688603329148287, 2: 0.098202233040380106, 5: 0.041792452513154245, 10: 0.018794215326586872,
           20: 0.0076773415961120684, 50: 0.0021426779029235852},
    0.6: {1: 0.29218352574512979, 2: 0.16873410298051917, 5: 0.05687182163808339, 10: 0.018427986454282862,
          20: 0.0045963940526165889, 50: 0.00051854186400678009},
    0.4: {1: 0.52812235049675319, 2: 0.23228548449242412, 5: 0.030649217102572916, 10: 0.0017755666226025127,
          20: 1.1423691037214024e-5, 50: 1.3001042126431046e-11},
    0.25: {1: 0.71896201109716095, 2: 0.19827001849526826, 5: 0.0052978565264197751, 10: 1.6305371618883792e-5,
           20: 2.0156857662974058e-10, 50: 6.3213510212297344e-25},
    0.5: {1: 0.40365263767680593, 2: 0.21095791303041778, 5: 0.051248811503323698, 10: 0.0095233953335721274,
          20: 0.00082101619189892352, 50: 5.6764988444663096e-6},
}


@pytest.fixture(scope="module")
def tables():
    return {p: degree_distribution(p, 200) for p in GRID}


@pytest.mark.parametrize(
    "p,beta,gamma,regime",
    [
        (0.75, 1.5, 1 / 3, Regime.SUPERCRITICAL),
        (0.5, None, 1.0, Regime.CRITICAL),
        (0.25, -0.5, 3.0, Regime.SUBCRITICAL),
    ],
)
def test_regime_params(p, beta, gamma, regime):
    rp = regime_params(p)
    assert rp.regime is regime
    assert rp.gamma == pytest.approx(gamma, rel=1e-15)
    if beta is None:
        assert rp.beta is None
    else:
        assert rp.beta == pytest.approx(beta, rel=1e-15)
        assert rp.beta * (2 * p - 1) == pytest.approx(p, rel=1e-15)
    assert rp.gamma * p == pytest.approx(1 - p, rel=1e-15)


def test_regime_boundary_is_exact():
    assert regime_params(0.5 + 1e-15).regime is Regime.SUPERCRITICAL
    assert regime_params(0.5 - 1e-15).regime is Regime.SUBCRITICAL


@pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 2.0])
def test_regime_params_domain(p):
    with pytest.raises(ValidationError):
        regime_params(p)


@pytest.mark.parametrize("p", GRID)
def test_matches_frozen_oracle(tables, p):
    d = tables[p]
    for k, ref in ORACLE[p].items():
        assert d.d(k) == pytest.approx(ref, rel=1e-11, abs=1e-13)


def _adaptive_supercritical(p, k):
    beta, gamma = p / (2 * p - 1), (1 - p) / p
    f = lambda t: t**k * (1 - gamma * t) ** (-(beta + 1))
    val, _ = integrate.quad(f, 0, 1, weight="alg", wvar=(0, beta - 1), epsabs=1e-15, epsrel=1e-13, limit=200)
    return gamma * val


def _adaptive_subcritical(p, k):
    beta, gamma = p / (2 * p - 1), (1 - p) / p
    f = lambda t: t**k * (1 - t / gamma) ** (-(1 - beta))
    val, _ = integrate.quad(f, 0, 1, weight="alg", wvar=(0, -1 - beta), epsabs=1e-15, epsrel=1e-13, limit=200)
    return gamma ** (-k) * val


@pytest.mark.parametrize("k", [1, 3, 7])
def test_supercritical_against_adaptive_quadrature(k):
    assert abs(degree_dist_supercritical(0.75, 10).d(k) - _adaptive_supercritical(0.75, k)) < 1e-10


@pytest.mark.parametrize("k", [1, 5, 9])
def test_subcritical_against_adaptive_quadrature(k):
    assert abs(degree_dist_subcritical(0.25, 10).d(k) - _adaptive_subcritical(0.25, k)) < 1e-10


def _e1_series(x, terms=60):
    s = sum((-x) ** n / (n * math.factorial(n)) for n in range(1, terms))
    return -np.euler_gamma - math.log(x) - s


def test_critical_d1_exponential_integral():
    d1 = degree_dist_critical(10).d(1)
    assert abs(d1 - (1 - math.e * _e1_series(1.0))) < 1e-13
    assert abs(d1 - (1 - math.e * special.exp1(1.0))) < 1e-13
    assert abs(d1 - 0.403653) < 1e-6


def test_critical_half_line_form():
    for k in (1, 4, 12):
        ref, _ = integrate.quad(lambda t: k * t ** (k - 1) * math.exp(-t) * (1 + t) ** (-(k + 1)), 0, np.inf, epsabs=1e-14)
        assert degree_dist_critical(20).d(k) == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("p", GRID)
def test_d0_bookkeeping(tables, p):
    assert tables[p].d0 == pytest.approx((1 - p) / p, rel=1e-15)


def test_d0_reproduced_by_zero_moment():
    # the quadrature also evaluates k = 0; it must reproduce gamma
    from dupdel.theory.distribution import _adaptive_log_values, _log_integral_mobius, _mobius_setup

    for p in (0.25, 0.75):
        setup = _mobius_setup(p)
        v = _adaptive_log_values(np.array([0]), 1e-12, lambda kk, n: _log_integral_mobius(setup, kk, n))
        assert math.exp(v[0]) == pytest.approx((1 - p) / p, rel=1e-13)


@pytest.mark.parametrize("p", GRID)
def test_positive(tables, p):
    assert np.all(tables[p].values > 0) and tables[p].next_value > 0 and tables[p].tail_mass >= 0


@pytest.mark.parametrize("p", GRID)
def test_recursion_residual_bound(p):
    d = degree_distribution(p)
    r = recursion_residuals(d)[: d.K - 1]
    bound = 10 * d.tol * np.maximum(1.0, d.extended()[: d.K - 1])
    assert np.all(np.abs(r) <= bound)


def test_recursion_residual_single_entries(tables):
    d = tables[0.75]
    assert abs(recursion_residual(d, 10)) < 1e-8
    assert recursion_residual(d, 1) == pytest.approx(recursion_residuals(d)[0], abs=1e-18)
    with pytest.raises(IndexError):
        recursion_residual(d, 0)
    with pytest.raises(IndexError):
        recursion_residual(d, d.K)


def test_residual_linear_in_perturbation(tables):
    d = tables[0.6]
    k, eps = 7, 1e-6
    before = recursion_residual(d, k)
    d.values[k - 1] += eps
    try:
        after = recursion_residual(d, k)
    finally:
        d.values[k - 1] -= eps
    assert after - before == pytest.approx((k + 0.6) * eps, rel=1e-8)


@pytest.mark.parametrize("p", GRID)
def test_normalisation_with_tail_rule(p):
    d = degree_distribution(p)
    assert abs(d.total() - 1) <= 1e-6
    assert d.K == tail_rule_K(p)


def test_tail_rule_cap_and_order():
    assert tail_rule_K(0.75) == K_CAP
    assert tail_rule_K(0.25) < tail_rule_K(0.4) < tail_rule_K(0.5)
    assert tail_rule_K(0.6, norm_tol=1e-3) < tail_rule_K(0.6)
    for p in (0.25, 0.5, 0.6):
        K = tail_rule_K(p)
        assert asymptotic_tail_bound(p, K) < 1e-6 <= asymptotic_tail_bound(p, K - 1)


def test_partial_sum_identity(tables):
    d = tables[0.75]
    r = partial_sum_identity_residuals(d)
    assert len(r) == d.K and np.max(np.abs(r[: d.K - 1])) < 1e-8
    assert partial_sum_identity_residual(d, 5) == pytest.approx(r[4], abs=1e-18)
    with pytest.raises(IndexError):
        partial_sum_identity_residual(d, d.K)


def test_tail_mass_is_remaining_mass(tables):
    d = degree_distribution(0.4, 400)
    short = degree_distribution(0.4, 30)
    assert short.tail_mass == pytest.approx(math.fsum(d.values[30:]) + d.tail_mass, abs=1e-12)


@pytest.mark.parametrize("p", [0.25, 0.4])
def test_subcritical_ratio_tends_to_inverse_gamma(p):
    d = degree_distribution(p, 60)
    gamma = (1 - p) / p
    assert d.d(41) / d.d(40) == pytest.approx(1 / gamma, rel=0.05)


def test_dispatch():
    assert degree_distribution(0.5, 10).regime is Regime.CRITICAL
    assert degree_distribution(0.5 + 1e-13, 10).regime is Regime.CRITICAL
    assert degree_distribution(0.75, 10).regime is Regime.SUPERCRITICAL
    assert degree_distribution(0.25, 10).regime is Regime.SUBCRITICAL
    assert degree_distribution(0.5 + 1e-13, 10).d(3) == degree_dist_critical(10).d(3)


@pytest.mark.parametrize("dp", [1e-3, -1e-3, 1e-6, -1e-6])
def test_continuity_at_threshold(dp):
    crit = degree_dist_critical(20).values
    near = degree_distribution(0.5 + dp, 20).values
    assert np.max(np.abs(near - crit)) < 2e-2
    assert np.max(np.abs(near - crit)) < 50 * abs(dp)


def test_series_form_matches_quadrature():
    q = degree_dist_supercritical(0.75, 50)
    h = degree_dist_hypergeometric(0.75, 50)
    assert h.method is Method.HYPERGEOMETRIC
    assert np.max(np.abs(q.values - h.values)) < 1e-9


def test_series_form_is_supercritical_only():
    with pytest.raises(ValidationError):
        degree_dist_hypergeometric(0.4, 10)


def test_impossible_tolerance_reports_worst_k():
    with pytest.raises(QuadratureError) as info:
        degree_dist_supercritical(0.75, 10, tol=1e-40)
    assert 0 <= info.value.worst_k <= 11


@pytest.mark.parametrize("fn,args", [(degree_dist_supercritical, (0.4,)), (degree_dist_subcritical, (0.6,)), (degree_distribution, (1.0,))])
def test_branch_domains(fn, args):
    with pytest.raises(ValidationError):
        fn(*args)


@pytest.mark.parametrize("K", [0, 1, 2.5])
def test_bad_truncation(K):
    with pytest.raises(ValidationError):
        degree_distribution(0.6, K)


def test_clique_sizes(tables):
    d = tables[0.75]
    c = d.clique_sizes()
    k = np.arange(1, d.K + 1)
    assert np.array_equal(c.values * k, d.values) or np.allclose(c.values * k, d.values, rtol=1e-15, atol=0)
    p = 0.75
    assert c.values[0] == pytest.approx((1 - p) * (1 + 2 * c.values[1]) / (1 + p), rel=1e-12)


def test_large_k_entries_stay_in_log_space():
    d = degree_distribution(0.25, 700)
    assert np.all(np.isfinite(d.log_values))
    assert d.log_values[-1] < -700


def test_table_csv():
    d = degree_distribution(0.75, 200)
    text = table_to_csv(d)
    head = text.splitlines()[0]
    assert head.startswith("#") and "beta=1.5" in head and "gamma=0.333333" in head and "K=200" in head
    meta, rows = parse_table_csv(text)
    assert meta["regime"] == "supercritical" and meta["method"] == "quadrature"
    assert rows.shape == (200, 4)
    assert np.array_equal(rows[:, 0], np.arange(1, 201))
    assert np.allclose(rows[:, 1], d.values, rtol=0, atol=0)
    assert np.allclose(rows[:, 2] * rows[:, 0], rows[:, 1], rtol=1e-15)


def test_table_json():
    d = degree_distribution(0.5, 30)
    data = json.loads(table_to_json(d))
    assert data["meta"]["regime"] == "critical" and data["meta"]["K"] == 30
    assert data["rows"][0]["d_k"] == pytest.approx(0.403653, abs=1e-6)


def test_subcritical_table_decreasing():
    d = degree_distribution(0.25)
    assert np.all(np.diff(d.values) < 0)
