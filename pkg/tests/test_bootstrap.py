from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import oracles
from ci_workbench.bootstrap import (
    BootstrapPlan,
    acceleration,
    bca_levels,
    bias_constant,
    bootstrap_ci,
    bootstrap_replicates,
    exhaustive_indices,
    jackknife_values,
)
from ci_workbench.errors import BcaDegenerate, StatisticUndefinedOnResample
from ci_workbench.intervals import BCA_FALLBACK, DEGENERATE_POINT, CiSpec
from ci_workbench.metrics import LogitTable, MetricEvaluator
from ci_workbench.stats_core import IQM, IQR, MEAN, MEDIAN, SD, Sample


def test_constant_sample_replicates_and_intervals():
    s = Sample([0.7] * 9)
    reps = bootstrap_replicates(s, MEAN, BootstrapPlan(resamples=101))
    assert np.all(reps == 0.7)
    for method in ("percentile", "basic", "bca"):
        iv, _ = bootstrap_ci(s, MEAN, BootstrapPlan(resamples=101, method=method))
        assert iv.lower == iv.upper == 0.7 and DEGENERATE_POINT in iv.flags


def test_exhaustive_matches_enumeration():
    reps = bootstrap_replicates(Sample([1.0, 2.0, 3.0]), MEAN, BootstrapPlan(exhaustive=True))
    expected = sorted(float(v) for v in oracles.resample_means_exhaustive([1, 2, 3]))
    assert reps.size == 27
    np.testing.assert_allclose(np.sort(reps), expected, atol=1e-15)
    assert exhaustive_indices(2).tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]


def test_determinism_and_prefix_stability():
    rng = np.random.default_rng(0)
    s = Sample(rng.normal(size=40))
    a = bootstrap_replicates(s, MEDIAN, BootstrapPlan(resamples=500, seed=9))
    b = bootstrap_replicates(s, MEDIAN, BootstrapPlan(resamples=500, seed=9))
    c = bootstrap_replicates(s, MEDIAN, BootstrapPlan(resamples=2000, seed=9))
    d = bootstrap_replicates(s, MEDIAN, BootstrapPlan(resamples=500, seed=10))
    assert np.array_equal(a, b)
    assert np.array_equal(a, c[:500])
    assert not np.array_equal(a, d)


def test_bias_constant_and_acceleration_symmetric():
    assert bias_constant(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), 3.0) == 0.0
    assert acceleration(np.array([1.0, 2.0, 3.0])) == 0.0
    assert bca_levels(0.0, 0.0, 0.05) == (0.025, 0.975)


def test_bias_constant_midrank():
    reps = np.array([1.0, 2.0, 2.0, 2.0, 5.0])
    assert bias_constant(reps, 2.0) == pytest.approx(stats.norm.ppf(0.5))
    with pytest.raises(BcaDegenerate):
        bias_constant(np.array([3.0, 4.0]), 1.0)


def test_tied_middle_order_statistics_raise():
    s = Sample([1.0, 2.0, 3.0, 3.0, 4.0, 5.0])
    with pytest.raises(BcaDegenerate):
        bootstrap_ci(s, MEDIAN, BootstrapPlan(resamples=999, method="bca"))
    iv, diag = bootstrap_ci(s, MEDIAN, BootstrapPlan(resamples=999, method="bca"), fallback=True)
    assert BCA_FALLBACK in iv.flags and diag is None
    perc, _ = bootstrap_ci(s, MEDIAN, BootstrapPlan(resamples=999, method="percentile"))
    assert (iv.lower, iv.upper) == (perc.lower, perc.upper)


def test_bca_against_hand_formula():
    rng = np.random.default_rng(4)
    x = rng.exponential(size=35)
    plan = BootstrapPlan(resamples=4999, method="bca", seed=2)
    iv, diag = bootstrap_ci(Sample(x), MEAN, plan)
    reps = bootstrap_replicates(Sample(x), MEAN, plan)
    theta = x.mean()
    p = (np.sum(reps < theta) + 0.5 * np.sum(reps == theta)) / reps.size
    z0 = stats.norm.ppf(p)
    jack = np.array([np.delete(x, i).mean() for i in range(x.size)])
    u = jack.mean() - jack
    a = np.sum(u ** 3) / (6 * np.sum(u ** 2) ** 1.5)
    zq = stats.norm.ppf([0.025, 0.975])
    lv = stats.norm.cdf(z0 + (z0 + zq) / (1 - a * (z0 + zq)))
    assert diag.z0 == pytest.approx(z0, abs=1e-12)
    assert diag.accel == pytest.approx(a, rel=1e-9)
    assert (diag.alpha1, diag.alpha2) == pytest.approx(tuple(lv), abs=1e-12)
    assert 0 < diag.alpha1 < diag.alpha2 < 1
    q = np.quantile(reps, lv, method="linear")
    assert (iv.lower, iv.upper) == pytest.approx(tuple(q), abs=1e-12)
    np.testing.assert_allclose(jackknife_values(Sample(x), MEAN), jack, atol=1e-12)


@given(st.lists(st.floats(0, 10), min_size=3, max_size=25), st.integers(0, 2**32))
def test_basic_mirrors_percentile_bit_exactly(xs, seed):
    s = Sample(xs)
    p, _ = bootstrap_ci(s, MEAN, BootstrapPlan(resamples=199, method="percentile", seed=seed))
    b, _ = bootstrap_ci(s, MEAN, BootstrapPlan(resamples=199, method="basic", seed=seed))
    assert b.lower == 2.0 * p.estimate - p.upper
    assert b.upper == 2.0 * p.estimate - p.lower


@given(st.lists(st.floats(0, 1), min_size=4, max_size=25), st.floats(-5, 5),
       st.sampled_from([MEAN, MEDIAN, IQM]), st.sampled_from(["percentile", "basic"]))
def test_location_equivariance(xs, c, stat, method):
    x = np.array(xs)
    if np.ptp(x) == 0:
        return
    plan = BootstrapPlan(resamples=99, method=method, seed=1)
    a, _ = bootstrap_ci(Sample(x), stat, plan)
    b, _ = bootstrap_ci(Sample(x + c), stat, plan)
    assert b.lower == pytest.approx(a.lower + c, abs=1e-9)
    assert b.upper == pytest.approx(a.upper + c, abs=1e-9)


@pytest.mark.parametrize("stat", [SD, IQR])
def test_scale_statistics_are_supported(stat):
    rng = np.random.default_rng(1)
    iv, _ = bootstrap_ci(Sample(rng.normal(size=60)), stat, BootstrapPlan(resamples=999, method="bca"))
    assert iv.lower < iv.estimate < iv.upper


def test_metric_bootstrap_and_undefined_resample():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, size=80)
    logits = rng.normal(size=(80, 3))
    logits[np.arange(80), y] += 1.0
    table = LogitTable(logits, y, 3)
    iv, _ = bootstrap_ci(table, MetricEvaluator("f1", "macro"), BootstrapPlan(resamples=299, method="bca"))
    assert iv.lower <= iv.estimate <= iv.upper
    tiny = LogitTable(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([0, 1]), 2)
    with pytest.raises(StatisticUndefinedOnResample) as err:
        bootstrap_replicates(tiny, MetricEvaluator("auc", "macro"), BootstrapPlan(exhaustive=True))
    assert err.value.index == 0


def test_higher_level_is_wider():
    rng = np.random.default_rng(6)
    s = Sample(rng.normal(size=50))
    narrow, _ = bootstrap_ci(s, MEAN, BootstrapPlan(resamples=999), CiSpec(0.9))
    wide, _ = bootstrap_ci(s, MEAN, BootstrapPlan(resamples=999), CiSpec(0.99))
    assert wide.lower < narrow.lower and narrow.upper < wide.upper
