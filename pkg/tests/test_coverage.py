from __future__ import annotations

import math

import numpy as np
import pytest

import oracles
from ci_workbench.coverage import (
    estimate_coverage,
    exact_proportion_coverage,
    required_trials,
)
from ci_workbench.distfit import Kde1D, Pmf, TrueModel, fit_class_conditional, fit_kde
from ci_workbench.errors import MissingTruth, TruthPrecisionError
from ci_workbench.intervals import PROPORTION_METHODS, CiSpec, ProportionCount, prop_ci
from ci_workbench.metrics import LogitTable, MetricEvaluator
from ci_workbench.stats_core import MEAN, MEDIAN, Sample


@pytest.fixture(scope="module")
def gaussian_model():
    rng = np.random.default_rng(0)
    m = TrueModel(fit_kde(Sample(rng.normal(size=500))))
    m.add_truth(MEAN)
    m.add_truth(MEDIAN)
    return m


def test_wald_exact_oracle():
    assert exact_proportion_coverage("wald", 0.5, 10) == 0.890625
    assert 1 - 2 * 56 / 1024 == 0.890625


@pytest.mark.parametrize("method", PROPORTION_METHODS)
@pytest.mark.parametrize("p,n", [(0.1, 17), (0.5, 40), (0.83, 25)])
def test_exact_oracle_against_scipy_binomial(method, p, n):
    def interval(k, n):
        iv = prop_ci(ProportionCount(k, n), CiSpec(), method)
        return iv.lower, iv.upper

    assert exact_proportion_coverage(method, p, n) == pytest.approx(oracles.binomial_coverage(interval, p, n), abs=1e-12)


def test_monte_carlo_agrees_with_exact_oracle():
    p, n = 0.3, 20
    model = TrueModel(Pmf([0.0, 1.0], [1 - p, p]))
    model.add_truth(MEAN)
    for method in PROPORTION_METHODS:
        rec = estimate_coverage(model, MEAN, method, n, trials=4000, seed=5)
        exact = exact_proportion_coverage(method, p, n)
        assert abs(rec.coverage - exact) < 4 * rec.coverage_se + 1e-12, method


def test_point_mass_model_covers_always():
    model = TrueModel(Pmf([0.7], [1.0]), bounds=(0.0, 1.0))
    model.add_truth(MEAN)
    for method in ("z", "t", "hoeffding", "empirical_bernstein", "percentile", "basic", "bca"):
        rec = estimate_coverage(model, MEAN, method, 15, trials=50, seed=1, resamples=99)
        assert rec.coverage == 1.0 and rec.mean_width == 0.0 and rec.median_width == 0.0, method


def test_t_coverage_on_gaussian_truth(gaussian_model):
    rec = estimate_coverage(gaussian_model, MEAN, "t", 20, trials=10_000, seed=2)
    assert abs(rec.coverage - 0.95) <= 0.01
    assert rec.coverage_se == pytest.approx(math.sqrt(rec.coverage * (1 - rec.coverage) / 10_000))


def test_determinism_and_parallel_equivalence(gaussian_model):
    a = estimate_coverage(gaussian_model, MEDIAN, "percentile", 15, trials=40, seed=9, resamples=99)
    b = estimate_coverage(gaussian_model, MEDIAN, "percentile", 15, trials=40, seed=9, resamples=99)
    c = estimate_coverage(gaussian_model, MEDIAN, "percentile", 15, trials=40, seed=9, resamples=99, jobs=2)
    assert a == b == c


def test_resamples_do_not_perturb_samples(gaussian_model):
    # the t interval ignores B, so its record must not change with B
    a = estimate_coverage(gaussian_model, MEAN, "t", 12, trials=200, seed=4, resamples=99)
    b = estimate_coverage(gaussian_model, MEAN, "t", 12, trials=200, seed=4, resamples=999)
    assert a == b


def test_width_scaling(gaussian_model):
    for method in ("t", "percentile"):
        w100 = estimate_coverage(gaussian_model, MEAN, method, 100, trials=300, seed=3, resamples=499).mean_width
        w250 = estimate_coverage(gaussian_model, MEAN, method, 250, trials=300, seed=3, resamples=499).mean_width
        ratio = (w250 * math.sqrt(250)) / (w100 * math.sqrt(100))
        assert abs(ratio - 1) < 0.15


def test_se_consistency_battery():
    model = TrueModel(Pmf([0.0, 1.0], [0.6, 0.4]))
    model.add_truth(MEAN)
    runs = [estimate_coverage(model, MEAN, "wilson", 30, trials=2000, seed=s) for s in range(20)]
    pairs = [(a, b) for i, a in enumerate(runs) for b in runs[i + 1:]]
    ok = sum(abs(a.coverage - b.coverage) <= 4 * math.hypot(a.coverage_se, b.coverage_se) for a, b in pairs)
    assert ok / len(pairs) >= 0.99


def _atom_model():
    # 30% point mass at 0.5 plus a smooth part symmetric about 0.5
    rng = np.random.default_rng(0)
    smooth = np.r_[0.5 + rng.uniform(0.02, 0.3, 350), 0.5 - rng.uniform(0.02, 0.3, 350)]
    centers = np.r_[np.full(300, 0.5), smooth]
    h = np.r_[np.zeros(300), np.full(700, 0.02)]
    m = TrueModel(Kde1D(centers, 0.02, np.ones(1000), np.ones(1000), h, (0.0, 1.0)), bounds=(0.0, 1.0))
    m.add_truth(MEDIAN)
    return m


def test_degenerate_policies():
    m = _atom_model()
    miss = estimate_coverage(m, MEDIAN, "bca", 60, trials=40, seed=1, resamples=199)
    fall = estimate_coverage(m, MEDIAN, "bca", 60, trials=40, seed=1, resamples=199, policy="fallback_percentile")
    excl = estimate_coverage(m, MEDIAN, "bca", 60, trials=40, seed=1, resamples=199, policy="exclude")
    perc = estimate_coverage(m, MEDIAN, "percentile", 60, trials=40, seed=1, resamples=199)
    assert miss.degenerate_count == fall.degenerate_count == excl.degenerate_count > 0
    assert miss.coverage <= fall.coverage
    assert fall.coverage == perc.coverage
    if excl.degenerate_count < 40:
        assert excl.coverage == pytest.approx(
            miss.coverage * 40 / (40 - excl.degenerate_count))
    with pytest.raises(ValueError):
        estimate_coverage(m, MEDIAN, "bca", 60, trials=5, policy="ignore")


def test_missing_truth_and_precision_guard():
    m = TrueModel(Pmf([0.0, 1.0], [0.5, 0.5]))
    with pytest.raises(MissingTruth):
        estimate_coverage(m, MEAN, "t", 10, trials=10)
    rng = np.random.default_rng(1)
    y = np.repeat([0, 1], 20)
    logits = rng.normal(size=(40, 2))
    logits[np.arange(40), y] += 1.5
    cm = TrueModel(fit_class_conditional(LogitTable(logits, y, 2)))
    acc = MetricEvaluator("accuracy")
    cm.add_truth(acc, draws=2_000)
    with pytest.raises(TruthPrecisionError):
        estimate_coverage(cm, acc, "wilson", 2000, trials=3)
    cm.add_truth(acc, draws=200_000)
    rec = estimate_coverage(cm, acc, "wilson", 50, trials=200, seed=0)
    assert 0.85 < rec.coverage <= 1.0 and rec.aggregation == "intrinsic"


def test_trials_planner():
    assert [required_trials(p) for p in (0.5, 0.8, 0.9, 0.95, 0.99)] == [9604, 6147, 3457, 1825, 380]
    assert required_trials(0.9, conservative=True) == 3458
    assert required_trials(0.99, conservative=True) == 381
    with pytest.raises(ValueError):
        required_trials(1.0)
