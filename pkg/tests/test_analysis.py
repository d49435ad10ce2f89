import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dupdel.analysis import (
    ComparisonReport,
    EmpiricalDistribution,
    compare,
    convergence_trace,
    default_power_law_window,
    default_rate_window,
    empirical_degree_distribution,
    expected_next_clique_counts,
    fit_exponential_rate,
    fit_power_law_exponent,
    growth_rate_check,
    lumped_total_variation,
    mean_report,
    monte_carlo_next_clique_counts,
    pool_replicas,
    reports_from_json,
    reports_to_csv,
    reports_to_json,
    run_replicas,
    total_variation,
)
from dupdel.errors import ValidationError
from dupdel.process import CliqueState, ProcessParams, Snapshot, advance, init_state, make_stream, simulate
from dupdel.theory import Method, degree_distribution
from dupdel.theory.distribution import DegreeDistribution

counts_st = st.dictionaries(st.integers(1, 30), st.integers(0, 5), min_size=1).filter(lambda d: any(d.values()))


def table(values, tail=0.0, p=0.75):
    values = np.asarray(values, dtype=float)
    return DegreeDistribution(p, values, 0.0, 0.0, tail, Method.QUADRATURE, 1e-12)


def emp(fractions, n=100):
    return EmpiricalDistribution(1, n, fractions)


@pytest.mark.parametrize(
    "counts,expected",
    [({1: 1}, {1: 1.0}), ({1: 2, 2: 1}, {1: 0.5, 2: 0.5})],
)
def test_empirical_examples(counts, expected):
    assert empirical_degree_distribution(CliqueState.from_counts(counts)).fractions == expected


@given(counts_st)
def test_empirical_fractions_sum_to_one(counts):
    s = CliqueState.from_counts(counts)
    e = empirical_degree_distribution(s)
    assert abs(math.fsum(e.fractions.values()) - 1) <= 1e-12
    for k, f in e.fractions.items():
        assert f == k * counts[k] / s.num_vertices


def test_empirical_rejects_bad_mass():
    with pytest.raises(ValidationError):
        EmpiricalDistribution(0, 3, {1: 0.5})


def test_pool_replicas():
    a = Snapshot(5, 3, ((1, 1), (2, 1)))
    b = Snapshot(5, 4, ((4, 1),))
    pooled = pool_replicas([a, b])
    assert pooled.fractions == {1: 1 / 7, 2: 2 / 7, 4: 4 / 7}
    with pytest.raises(ValidationError):
        pool_replicas([a, Snapshot(6, 4, ((4, 1),))])


def test_expected_counts_single_vertex():
    for p in (0.1, 0.5, 0.9):
        out = expected_next_clique_counts(init_state(), p)
        assert out == pytest.approx({1: 1 - p, 2: p}, abs=1e-15)


def test_expected_counts_single_edge():
    out = expected_next_clique_counts(CliqueState.from_counts({2: 1}), 0.5)
    assert out == pytest.approx({1: 1.0, 2: 0.0, 3: 0.5}, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(counts_st, st.floats(0.0, 1.0))
def test_expected_vertex_count_grows_by_p(counts, p):
    s = CliqueState.from_counts(counts)
    out = expected_next_clique_counts(s, p)
    assert math.fsum(k * c for k, c in out.items()) == pytest.approx(s.num_vertices + p, rel=1e-12)


FROZEN = CliqueState.from_counts({1: 8, 2: 5, 3: 3, 5: 2, 8: 1, 13: 1})


def test_monte_carlo_one_step_relative():
    assert FROZEN.num_cliques == 20
    mean, se = monte_carlo_next_clique_counts(FROZEN, 0.6, 10**6, make_stream(1))
    ex = expected_next_clique_counts(FROZEN, 0.6)
    for k, e in ex.items():
        if e > 0.1:
            assert abs(mean[k - 1] - e) <= 0.01 * e
        if se[k - 1] == 0:
            assert mean[k - 1] == pytest.approx(e, abs=1e-12)


def test_monte_carlo_one_step_matches_full_step():
    # the moment kernel must see exactly the transitions step() would make
    rng_words = make_stream(4)
    mean, _ = monte_carlo_next_clique_counts(FROZEN, 0.3, 2, rng_words)
    rng = make_stream(4)
    tallies = np.zeros_like(mean)
    for _ in range(2):
        s = advance(FROZEN.copy(), 0.3, 1, rng)
        for k, c in s.counts_map().items():
            tallies[k - 1] += c
    assert np.array_equal(mean, tallies / 2)


def test_tv_examples():
    assert lumped_total_variation([1, 0, 0], [0, 1, 0]) == 1.0
    e = emp({1: 0.25, 2: 0.75})
    assert total_variation(e, table([0.25, 0.75])) == 0.0
    assert total_variation(emp({1: 1.0}), table([0.0, 1.0])) == 1.0


def test_tv_lumps_tail():
    # mass beyond K lands in one bucket on both sides
    e = emp({1: 0.5, 7: 0.25, 9: 0.25})
    assert total_variation(e, table([0.5, 0.0], tail=0.5)) == 0.0


def test_tv_shape_mismatch():
    with pytest.raises(ValidationError):
        lumped_total_variation([1.0], [0.5, 0.5])


prob_vec = st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 0).map(lambda v: np.array(v) / sum(v))


@given(prob_vec, prob_vec, prob_vec)
def test_tv_is_a_metric(u, v, w):
    duv = lumped_total_variation(u, v)
    assert duv == lumped_total_variation(v, u)
    assert 0 <= duv <= 1 + 1e-12
    assert lumped_total_variation(u, u) == 0
    assert duv <= lumped_total_variation(u, w) + lumped_total_variation(w, v) + 1e-12


def _normalised(weights):
    tot = math.fsum(weights.values())
    return {k: v / tot for k, v in weights.items()}


def test_fit_exact_power_law():
    e = emp(_normalised({k: k**-2.0 for k in range(1, 101)}))
    assert fit_power_law_exponent(e, 1, 100) == pytest.approx(2.0, abs=1e-9)


def test_fit_exact_geometric():
    e = emp(_normalised({k: 3.0**-k for k in range(1, 40)}))
    assert fit_exponential_rate(e, 1, 39) == pytest.approx(math.log(3), abs=1e-9)


def test_fit_needs_five_points():
    e = emp(_normalised({k: 1.0 for k in (10, 11, 12, 13)}))
    with pytest.raises(ValidationError):
        fit_power_law_exponent(e, 10, 100)
    with pytest.raises(ValidationError):
        fit_exponential_rate(e, 20, 10)


def test_fit_on_supercritical_theory():
    d = degree_distribution(0.75, 500)
    e = emp(_normalised({k: float(d.values[k - 1]) for k in range(1, 501)}))
    assert abs(fit_power_law_exponent(e, 50, 500) - 1.5) < 0.1


def test_fit_on_subcritical_theory():
    d = degree_distribution(0.25, 60)
    e = emp(_normalised({k: float(d.values[k - 1]) for k in range(1, 61)}))
    assert fit_exponential_rate(e, 20, 60) == pytest.approx(math.log(3), rel=0.05)


def test_default_windows():
    s = CliqueState.from_counts({1: 500, 2: 120, 3: 50, 4: 30, 5: 40, 6: 20, 10: 12, 11: 10, 12: 3, 40: 1})
    e = empirical_degree_distribution(s)
    assert default_power_law_window(e) == (10, 11)
    # sizes with >= 100 vertices: 1, 2, 3, 4, 5, 6, 10, 11 -> [5, 11] holds four occupied sizes, so k_min drops to 4
    assert default_rate_window(e) == (4, 11)


def test_growth_ratio_forced_duplications():
    m = 250
    s = advance(init_state(), 1.0, m, make_stream(0))
    s.step_index = m
    for p in (0.5, 1.0):
        assert growth_rate_check(s, p) == (1 + m) / (p * m)


def test_growth_ratio_needs_a_step():
    with pytest.raises(ValidationError):
        growth_rate_check(init_state(), 0.5)


def test_growth_ratio_large_run():
    s = simulate(ProcessParams(0.75, seed=3), 10**6)
    assert 0.99 <= growth_rate_check(s, 0.75) <= 1.01


@pytest.fixture(scope="module")
def theory_075():
    return degree_distribution(0.75)


def test_convergence_trace_single_checkpoint(theory_075):
    params = ProcessParams(0.75, seed=5)
    [(m, rep)] = convergence_trace(params, theory_075, [20_000])
    s = simulate(params, 20_000)
    assert m == 20_000
    assert rep.tv_distance == total_variation(empirical_degree_distribution(s), theory_075)
    assert rep.growth_ratio == growth_rate_check(s, 0.75)


def test_convergence_trace_deterministic(theory_075):
    a = convergence_trace(ProcessParams(0.75, seed=9), theory_075, [100, 5000])
    b = convergence_trace(ProcessParams(0.75, seed=9), theory_075, [100, 5000])
    assert [r.to_json_dict() for _, r in a] == [r.to_json_dict() for _, r in b]


def test_convergence_trace_trends_down(theory_075):
    better = 0
    for seed in range(20):
        trace = convergence_trace(ProcessParams(0.75, seed=seed), theory_075, [10**3, 10**4, 10**5, 10**6])
        better += trace[-1][1].tv_distance < trace[0][1].tv_distance
    assert better >= 19


def test_convergence_trace_rejects_zero():
    with pytest.raises(ValidationError):
        convergence_trace(ProcessParams(0.75), table([1.0]), [0, 10])


def _report(**kw):
    base = dict(tv_distance=0.1, fitted_exponent=1.4, fitted_rate=None, growth_ratio=1.0, per_k_errors={1: 0.01, 2: -0.02}, m=10, p=0.75, K=2)
    base.update(kw)
    return ComparisonReport(**base)


def test_report_json_round_trip():
    reps = [_report(), _report(fitted_exponent=None, fitted_rate=1.1, replica=3)]
    back = reports_from_json(reports_to_json(reps))
    assert back == reps
    d = reps[0].to_json_dict()
    for key in ("tv_distance", "fitted_exponent", "fitted_rate", "growth_ratio", "per_k_errors"):
        assert key in d


def test_report_csv_layout():
    lines = reports_to_csv([_report(replica=0)]).splitlines()
    assert lines[0] == "replica,m,k,error,tv_distance,fitted_exponent,fitted_rate,growth_ratio"
    assert lines[1] == "0,10,1,0.01,0.1,1.4,,1.0"
    assert len(lines) == 3


def test_mean_report():
    a = _report(tv_distance=0.1, fitted_exponent=1.0)
    b = _report(tv_distance=0.3, fitted_exponent=None, per_k_errors={1: 0.03})
    m = mean_report([a, b])
    assert m.tv_distance == pytest.approx(0.2)
    assert m.fitted_exponent == 1.0
    assert m.per_k_errors == pytest.approx({1: 0.02})
    assert m.replica is None
    with pytest.raises(ValidationError):
        mean_report([a, _report(m=11)])
    with pytest.raises(ValidationError):
        mean_report([])


def test_compare_fields(theory_075):
    s = simulate(ProcessParams(0.75, seed=2), 50_000)
    rep = compare(s, theory_075, replica=4)
    assert rep.replica == 4 and rep.m == 50_000 and rep.K == theory_075.K
    assert rep.fitted_rate is None and rep.fitted_exponent is not None
    assert max(rep.per_k_errors) == s.max_size()
    e = empirical_degree_distribution(s)
    assert rep.per_k_errors[1] == e.fractions[1] - theory_075.values[0]


def test_run_replicas_streams():
    runs = run_replicas(0.6, 11, 2000, 3, checkpoints=[1000, 2000])
    assert [[s.m for s in r] for r in runs] == [[1000, 2000]] * 3
    assert runs[0][-1] == simulate(ProcessParams(0.6, 11), 2000, rng=make_stream(11, 0)).snapshot()
    assert runs[0][-1] != runs[1][-1]
