import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from relind import testing, ustat
from relind.datagen import make_rng
from relind.errors import DegenerateVarianceError, UsageError
from relind.testing import Direction, TestConfig, Variant


def result(u, sigma2=None, n=100):
    u = np.asarray(u, dtype=float)
    d = len(u)
    p = int((1 + math.isqrt(1 + 8 * d)) // 2)
    s2 = None if sigma2 is None else np.asarray(sigma2, dtype=float)
    return ustat.UStatResult("kendall", u, s2, n, p)


def indep(n=40, p=8, seed=0):
    return np.random.default_rng(seed).normal(size=(n, p))


# ---------------------------------------------------------- closed forms


def test_gumbel_examples():
    assert testing.gumbel_quantile(0.5) == pytest.approx(0.366513, abs=1e-6)
    assert testing.gumbel_quantile(0.1) == pytest.approx(2.250367, abs=1e-6)


@given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
def test_gumbel_round_trip(alpha):
    q = testing.gumbel_quantile(alpha)
    assert math.exp(-math.exp(-q)) == pytest.approx(1 - alpha, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 2.0])
def test_gumbel_range(alpha):
    with pytest.raises(UsageError):
        testing.gumbel_quantile(alpha)


def test_norming_examples():
    # reference values from 50-digit mpmath evaluation
    a, b = testing.norming_constants(2)
    assert a == pytest.approx(1.177410, abs=1e-6)
    assert b == pytest.approx(0.258227, abs=1e-6)
    assert testing.norming_constants(4950)[0] == pytest.approx(4.124838, abs=1e-6)
    with pytest.raises(UsageError):
        testing.norming_constants(1)


def test_norming_monotone():
    a = [testing.norming_constants(d)[0] for d in range(2, 500)]
    assert all(x < y for x, y in zip(a, a[1:]))


# ------------------------------------------------------------ statistics


def test_statistic_examples():
    assert testing.stat_normalized_sq(result([0.2], [0.0025]), 0.1) == pytest.approx(3.0)
    assert testing.stat_normalized_sq(result([0.1, -0.1, 0.1], [0.01] * 3), 0.1) == 0.0
    assert testing.stat_nonnormalized_sq(result([0.3]), 0.1, 100) == pytest.approx(0.8)
    assert testing.stat_abs(result([0.3, -0.4, 0.0]), 0.1, 100) == pytest.approx(3.0)


def test_zero_delta_reductions():
    u = [0.3, -0.4, 0.1]
    assert testing.stat_nonnormalized_sq(result(u), 0.0, 25) == pytest.approx(5 * 0.16)
    assert testing.stat_abs(result(u), 0.0, 25) == pytest.approx(5 * 0.4)


def test_normalized_matches_loop():
    x = indep(30, 6, seed=1)
    r = ustat.ustat_matrix(x, "kendall")
    expect = max((u * u - 0.01) / (2 * math.sqrt(s) * 0.1) for u, s in zip(r.u, r.sigma2))
    assert testing.stat_normalized_sq(r, 0.1) == pytest.approx(expect, abs=1e-12)


def test_abs_sign_flip():
    x = indep(30, 5, seed=2)
    y = x.copy()
    y[:, 2] *= -1
    a = testing.stat_abs(ustat.ustat_matrix(x, "kendall"), 0.1, 30)
    b = testing.stat_abs(ustat.ustat_matrix(y, "kendall"), 0.1, 30)
    assert a == b


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_argmax_stability(u):
    u = np.array(u)
    r = result(u)
    k = int(np.argmax(np.abs(u)))
    assert testing.stat_nonnormalized_sq(r, 0.1, 9) == pytest.approx(3 * (u[k] ** 2 - 0.01))
    assert testing.stat_abs(r, 0.1, 9) == pytest.approx(3 * (abs(u[k]) - 0.1))


def test_degenerate_variance():
    r = result([0.2, 0.3, 0.1], [0.01, 0.0, 0.01])
    with pytest.raises(DegenerateVarianceError) as exc:
        testing.stat_normalized_sq(r, 0.1)
    assert exc.value.pairs == [(1, 3)]
    assert exc.value.exit_code == 5


def test_monotone_in_delta():
    r = ustat.ustat_matrix(indep(40, 8, seed=3), "kendall")
    deltas = np.linspace(0.02, 0.5, 25)
    for f in (
        lambda d: testing.stat_normalized_sq(r, d),
        lambda d: testing.stat_nonnormalized_sq(r, d, 40),
        lambda d: testing.stat_abs(r, d, 40),
    ):
        vals = [f(d) for d in deltas]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
    rejects = [testing.asymptotic_test(r, TestConfig(delta=d, method="asymptotic")).reject
               for d in deltas]
    for i in range(len(deltas)):
        if rejects[i]:
            assert all(rejects[:i])


# ------------------------------------------------------------ asymptotic


def test_asymptotic_critical_value():
    r = ustat.ustat_matrix(indep(30, 100, seed=4), "kendall")
    rep = testing.asymptotic_test(r, TestConfig(method="asymptotic"))
    a, b = testing.norming_constants(4950)
    assert rep.critical_value == pytest.approx(2.250367 / 4.124838 + b, abs=1e-6)
    assert rep.critical_value == testing.gumbel_quantile(0.1) / a + b


def test_asymptotic_strict_boundary():
    cfg = TestConfig(method="asymptotic")
    a, b = testing.norming_constants(3)
    crit = testing.gumbel_quantile(0.1) / a + b
    # choose U so the statistic lands exactly on crit: sigma = 1/(2*delta) gives stat = U^2 - delta^2
    u = math.sqrt(crit + 0.01)
    r = result([u, 0.0, 0.0], [25.0] * 3)
    rep = testing.asymptotic_test(r, cfg)
    assert rep.statistic == rep.critical_value
    assert rep.reject is False


def test_asymptotic_needs_method():
    r = ustat.ustat_matrix(indep(), "kendall")
    with pytest.raises(UsageError):
        testing.asymptotic_test(r, TestConfig())


# ------------------------------------------------------------ truncation


def test_truncate_examples():
    assert testing.truncate_v([0.05], 0.1)[0] == 0.05
    assert testing.truncate_v([-0.15], 0.1)[0] == 0.1
    assert testing.truncate_v([0.05], 0.1, "interchanged")[0] == 0.1
    assert testing.truncate_v([-0.15], 0.1, signed=True)[0] == -0.1
    assert testing.truncate_v([-0.15], 0.1, "interchanged")[0] == -0.15


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=20), st.floats(0, 1),
       st.booleans())
def test_centering_bound(v, delta, signed):
    out = testing.truncate_v(v, delta, "relevant", signed)
    assert np.all(np.abs(out) <= delta)


# ------------------------------------------------------------- resample


def test_resample_single_row():
    s = np.array([[1.5, 2.5]])
    assert np.array_equal(testing.resample(s, make_rng(0)), s)


def test_resample_uniform():
    s = np.arange(10.0).reshape(10, 1)
    rng = make_rng(7)
    hits = sum(int(np.sum(testing.resample(s, rng)[:, 0] == 0)) for _ in range(10**5))
    assert hits / 10**6 == pytest.approx(0.1, abs=0.005)


def test_resample_deterministic():
    s = indep(20, 3)
    a = testing.resample(s, make_rng(5, 1))
    b = testing.resample(s, make_rng(5, 1))
    assert np.array_equal(a, b)


# --------------------------------------------------------------- config


@pytest.mark.parametrize("kwargs", [
    dict(direction="classical", delta=0.1, variant="nv"),
    dict(direction="classical", delta=0.0, variant="normalized"),
    dict(direction="classical", delta=0.0, variant="nv", method="asymptotic"),
    dict(method="asymptotic", variant="abs"),
    dict(method="asymptotic", direction="interchanged"),
    dict(delta=0.0),
    dict(delta=-0.1, variant="nv"),
    dict(alpha=0.0),
    dict(alpha=1.0),
    dict(boot_reps=0),
    dict(seed=-1),
    dict(seed=2**64),
    dict(variant="median"),
    dict(direction="sideways"),
])
def test_config_rejects(kwargs):
    with pytest.raises(UsageError):
        TestConfig(**kwargs)


def test_config_accepts_aliases():
    cfg = TestConfig(variant="NonNormalizedSq", direction="classical", delta=0)
    assert cfg.variant is Variant.NON_NORMALIZED_SQ
    assert cfg.direction is Direction.CLASSICAL


def test_relevant_asymptotic_abs_is_usage_error():
    with pytest.raises(UsageError):
        testing.run_full_test(indep(), "kendall",
                              TestConfig(method="asymptotic", variant="abs"))


def test_too_few_bootstrap_reps():
    with pytest.raises(UsageError):
        testing.bootstrap_test(indep(), "kendall", TestConfig(boot_reps=19))


# ------------------------------------------------------------ bootstrap


@pytest.mark.parametrize("variant", ["normalized", "nv", "abs"])
def test_bootstrap_report(variant):
    x = indep(40, 6, seed=8)
    cfg = TestConfig(variant=variant, boot_reps=50, seed=11)
    rep = testing.bootstrap_test(x, "kendall", cfg)
    d = rep.boot_draws
    assert len(d) == 50 and np.all(np.diff(d) >= 0)
    assert d[0] <= rep.critical_value <= d[-1]
    assert rep.critical_value == d[math.ceil(0.9 * 50) - 1]
    assert rep.reject == (rep.statistic > rep.critical_value)
    assert 0.0 <= rep.p_value <= 1.0


@pytest.mark.parametrize("kernel", ["kendall", "spearman", "covariance"])
def test_bootstrap_thread_determinism(kernel):
    x = indep(30, 5, seed=9)
    cfg = TestConfig(variant="nv", boot_reps=24, seed=3)
    a = testing.bootstrap_test(x, kernel, cfg, rep=2, threads=1)
    b = testing.bootstrap_test(x, kernel, cfg, rep=2, threads=4)
    assert np.array_equal(a.boot_draws, b.boot_draws)
    assert (a.statistic, a.critical_value, a.reject) == (b.statistic, b.critical_value, b.reject)
    c = testing.bootstrap_test(x, kernel, cfg, rep=3)
    assert not np.array_equal(a.boot_draws, c.boot_draws)


def test_studentized_and_fixed_sigma_agree_on_statistic():
    x = indep(40, 6, seed=10)
    a = testing.bootstrap_test(x, "kendall", TestConfig(boot_reps=30))
    b = testing.bootstrap_test(x, "kendall", TestConfig(boot_reps=30, studentize=False))
    assert a.statistic == b.statistic
    assert not np.array_equal(a.boot_draws, b.boot_draws)


def test_fixed_sigma_draw_matches_formula():
    # recompute the first draw by hand from its resample
    from relind.datagen import draw_rng

    x = indep(25, 4, seed=12)
    cfg = TestConfig(boot_reps=20, studentize=False, seed=4)
    rep = testing.bootstrap_test(x, "spearman", cfg)
    r = ustat.ustat_matrix(x, "spearman")
    v = np.array([ustat.vstat_partition(x, "spearman", pr) for pr in ustat.PairGrid(4).pairs()])
    vd = testing.truncate_v(v, 0.1)
    draws = []
    for b in range(20):
        rng = draw_rng(4, 0, b)
        idx = rng.integers(0, 25, 25)
        us = ustat.ustat_matrix(x[idx], "spearman", sigma2=False).u
        c = us - v + vd
        draws.append(np.max((c * c - vd * vd) / (2 * np.sqrt(r.sigma2) * 0.1)))
    assert np.allclose(np.sort(draws), rep.boot_draws, rtol=0, atol=1e-12)


def test_interchanged_rule():
    x = indep(60, 6, seed=13)
    cfg = TestConfig(direction="interchanged", variant="nv", delta=0.3, boot_reps=40)
    rep = testing.bootstrap_test(x, "kendall", cfg)
    assert rep.critical_value == rep.boot_draws[math.ceil(0.1 * 40) - 1]
    assert rep.reject == (rep.statistic <= rep.critical_value)


def test_interchanged_detects_small_dependence():
    cfg = TestConfig(direction="interchanged", variant="abs", delta=0.3, boot_reps=40)
    rates = [testing.bootstrap_test(indep(80, 5, seed=s), "kendall", cfg, rep=s).reject
             for s in range(20)]
    assert np.mean(rates) >= 0.8


def test_classical_runs():
    cfg = TestConfig(direction="classical", delta=0.0, variant="nv", boot_reps=30)
    rep = testing.run_full_test(indep(30, 4), "kendall", cfg)
    assert rep.delta == 0.0
    assert rep.reject == (rep.statistic > rep.critical_value)


def test_exceedances_listed():
    x = indep(40, 4, seed=14)
    x[:, 1] = x[:, 0] + 0.1 * x[:, 1]
    rep = testing.run_full_test(x, "kendall", TestConfig(method="asymptotic"))
    assert (1, 2) in [(i, j) for i, j, _ in rep.exceedances]
    assert all(abs(u) > 0.1 for _, _, u in rep.exceedances)
    assert rep.reject


def test_degenerate_bootstrap_sample():
    x = indep(20, 3)
    x[:, 1] = 1.0
    with pytest.raises(DegenerateVarianceError):
        testing.bootstrap_test(x, "kendall", TestConfig(boot_reps=20))
