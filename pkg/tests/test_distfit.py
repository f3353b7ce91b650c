from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

import oracles
from ci_workbench.distfit import (
    Kde1D,
    Pmf,
    PointMassMixture,
    TrueModel,
    draw,
    fit_class_conditional,
    fit_kde,
    fit_kde_multi,
    fit_pmf,
    load_model,
    save_model,
    true_statistic,
)
from ci_workbench.distfit.kde import _pilot_density_1d, ball_epanechnikov_draws, epanechnikov_draws
from ci_workbench.errors import InsufficientData, MissingTruth, ZeroVariance
from ci_workbench.metrics import LogitTable, MetricEvaluator
from ci_workbench.stats_core import IQM, IQR, MEAN, MEDIAN, SD, Sample


@pytest.fixture(scope="module")
def beta_kde():
    rng = np.random.default_rng(0)
    return fit_kde(Sample(rng.beta(2, 5, size=300), (0.0, 1.0)))


def test_three_point_fit():
    k = fit_kde(Sample([0.2, 0.5, 0.8], (0.0, 1.0)))
    mass, first, _ = oracles.quad_moments(k.centers, k.bandwidths)
    assert abs(mass - 1.0) < 1e-6
    assert k.mean() == 0.5
    assert k.quantile(0.5) == pytest.approx(0.5, abs=1e-9)
    assert k.pdf([-1e-9, 1 + 1e-9, -0.5, 1.5]).tolist() == [0.0, 0.0, 0.0, 0.0]


def test_quadrature_against_closed_forms(beta_kde):
    k = beta_kde
    mass, m1, m2 = oracles.quad_moments(k.centers, k.bandwidths)
    assert abs(mass - 1.0) < 1e-6
    assert abs(m1 - k.mean()) < 1e-6
    assert abs((m2 - m1 ** 2) - k.variance()) < 1e-6
    assert abs(k.integral(0) - 1.0) < 1e-12


def test_pdf_matches_loop_oracle(beta_kde):
    xs = np.linspace(-0.1, 1.1, 37)
    ref = [oracles.kde_pdf_loop(beta_kde.centers, beta_kde.bandwidths, x) for x in xs]
    np.testing.assert_allclose(beta_kde.pdf(xs), ref, atol=1e-12)


def test_cdf_monotone_and_quantile_inverse(beta_kde):
    grid = np.linspace(-0.2, 1.2, 400)
    F = beta_kde.cdf(grid)
    assert F[0] == 0.0 and F[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all(np.diff(F) >= -1e-15)
    for p in (0.01, 0.25, 0.5, 0.9):
        q = beta_kde.quantile(p)
        assert beta_kde.cdf(q)[0] == pytest.approx(p, abs=1e-9)


def test_pilot_modifiers_monotone_in_density(beta_kde):
    k = beta_kde
    pilot = _pilot_density_1d(k.centers, k.pilot_bandwidth)
    rho = stats.spearmanr(1.0 / pilot, k.modifiers).statistic
    assert rho == pytest.approx(1.0, abs=1e-12)
    assert k.pilot_bandwidth == pytest.approx(1.06 * np.std(k.centers, ddof=1) * k.n ** -0.2)


def test_support_inside_bounds(beta_kde):
    k = beta_kde
    assert np.all(k.centers - k.bandwidths >= 0.0) and np.all(k.centers + k.bandwidths <= 1.0)


def test_boundary_cap_with_wide_pilot():
    # pilot bandwidth > 1 in data units: the trim alone would not confine mass
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 30, size=40)
    k = fit_kde(Sample(x, (0.0, 30.0)))
    assert k.pilot_bandwidth > 1
    assert np.all(k.centers - k.bandwidths >= 0.0) and np.all(k.centers + k.bandwidths <= 30.0)
    assert k.integral(0) == pytest.approx(1.0, abs=1e-12)


def test_point_on_bound_becomes_atom():
    k = fit_kde(Sample([0.0, 0.3, 0.5, 0.6, 1.0], (0.0, 1.0)))
    assert k.atom_mass == pytest.approx(0.4)
    assert k.cdf(0.0)[0] >= 0.2
    assert k.quantile(0.1) == 0.0
    assert k.integral(0) == pytest.approx(1.0, abs=1e-12)


def test_half_bounded_fit_trims_left_only():
    rng = np.random.default_rng(2)
    x = rng.exponential(2.0, size=200) + 0.01
    k = fit_kde(Sample(x, (0.0, math.inf)))
    assert np.all(k.centers - k.bandwidths >= 0.0)
    right = np.argmax(x)
    assert k.bandwidths[right] == pytest.approx(min(x[right], k.modifiers[right]) * k.pilot_bandwidth)


def test_translation_and_reflection_equivariance(beta_kde):
    k = beta_kde
    x = k.centers
    moved = fit_kde(Sample(x + 3.0, (3.0, 4.0)))
    mirrored = fit_kde(Sample(1.0 - x, (0.0, 1.0)))
    for p in np.linspace(0.05, 0.95, 10):
        assert moved.quantile(p) == pytest.approx(k.quantile(p) + 3.0, abs=1e-9)
        assert mirrored.quantile(1 - p) == pytest.approx(1.0 - k.quantile(p), abs=1e-9)


def test_scale_equivariance_without_bounds():
    rng = np.random.default_rng(4)
    x = rng.normal(size=150)
    k = fit_kde(Sample(x))
    scaled = fit_kde(Sample(2.5 * x - 1.0))
    for p in np.linspace(0.05, 0.95, 10):
        assert scaled.quantile(p) == pytest.approx(2.5 * k.quantile(p) - 1.0, abs=1e-8)
    assert scaled.variance() == pytest.approx(6.25 * k.variance(), rel=1e-12)


def test_affine_method_transports_quantiles(beta_kde):
    t = beta_kde.affine(-2.0, 5.0)
    assert t.bounds == (3.0, 5.0)
    for p in (0.1, 0.5, 0.8):
        assert t.quantile(1 - p) == pytest.approx(-2.0 * beta_kde.quantile(p) + 5.0, abs=1e-9)


def test_fit_errors():
    with pytest.raises(ZeroVariance):
        fit_kde(Sample([0.3, 0.3, 0.3]))
    with pytest.raises(InsufficientData):
        fit_kde(Sample([0.3]))


def test_kernel_draws_follow_epanechnikov():
    rng = np.random.default_rng(5)
    u = epanechnikov_draws(rng, 200_000)
    cdf = lambda t: 0.5 + 0.75 * t - 0.25 * t ** 3
    assert stats.kstest(u, cdf).pvalue > 1e-3
    b = ball_epanechnikov_draws(rng, 200_000, 2)
    r2 = np.sum(b * b, axis=1)
    # radial law for d=2: P(|x|^2 <= s) = 2s - s^2
    assert stats.kstest(r2, lambda s: 2 * s - s ** 2).pvalue > 1e-3


def test_draws_match_analytic_mean(beta_kde):
    x = beta_kde.sample(np.random.default_rng(6), 1_000_000)
    se = math.sqrt(beta_kde.variance() / x.size)
    assert abs(x.mean() - beta_kde.mean()) < 3 * se
    assert x.min() >= 0.0 and x.max() <= 1.0


def test_pmf_fit_and_truths():
    p = fit_pmf(Sample([1.0, 1.0, math.sqrt(2)]))
    assert p.support.tolist() == [1.0, math.sqrt(2)]
    np.testing.assert_allclose(p.probabilities, [2 / 3, 1 / 3], atol=1e-15)
    single = fit_pmf(Sample([0.4]))
    assert np.all(single.sample(np.random.default_rng(0), 10) == 0.4)
    x = np.random.default_rng(1).integers(0, 20, 50).astype(float)
    assert fit_pmf(Sample(x)).mean() == pytest.approx(x.mean(), abs=1e-14)
    fair = TrueModel(Pmf([0.0, 1.0], [0.5, 0.5]))
    assert true_statistic(fair, MEAN).value == 0.5
    point = TrueModel(Pmf([0.7], [1.0]))
    assert draw(point, 5, 3).values.tolist() == [0.7] * 5


def test_pmf_quantile_and_trimmed_mean():
    p = Pmf([1.0, 2.0, 3.0, 4.0], [0.1, 0.4, 0.4, 0.1])
    assert p.quantile(0.5) == 2.0 and p.quantile(0.51) == 3.0
    # trimmed at 25%: mass from 0.25 to 0.75 sits on 2 (0.25) and 3 (0.25)
    assert true_statistic(TrueModel(p), IQM).value == pytest.approx(2.5, abs=1e-12)
    assert true_statistic(TrueModel(p), IQR).value == 1.0


def test_truth_values_against_large_sample(beta_kde):
    m = TrueModel(beta_kde, bounds=(0.0, 1.0))
    x = np.sort(beta_kde.sample(np.random.default_rng(7), 2_000_000))
    ref = {
        "mean": x.mean(), "sd": x.std(ddof=1), "median": np.quantile(x, 0.5),
        "iqr": np.quantile(x, 0.75) - np.quantile(x, 0.25),
        "trimmed_mean(0.25)": stats.trim_mean(x, 0.25),
    }
    for stat in (MEAN, SD, MEDIAN, IQR, IQM):
        assert m.add_truth(stat).value == pytest.approx(ref[stat.name], abs=2e-3), stat.name
    assert set(m.true_values) == set(ref)
    with pytest.raises(MissingTruth):
        m.truth(MetricEvaluator("accuracy"))


def _logits(seed, counts, d=3):
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(len(counts)), counts)
    logits = rng.normal(size=(y.size, d))
    logits[np.arange(y.size), y] += 2.0
    return LogitTable(logits, y, d)


def test_class_conditional_fit_and_sampling():
    t = _logits(0, [60, 39, 1])
    m = fit_class_conditional(t)
    np.testing.assert_allclose(m.class_probs, [0.6, 0.39, 0.01])
    assert m.singleton_classes == [2] and m.flags == {"2": "point_mass"}
    assert isinstance(m.components[2], PointMassMixture)
    sample = m.sample(np.random.default_rng(1), 1_000_000)
    freq = np.bincount(sample.labels, minlength=3) / sample.n
    se = np.sqrt(m.class_probs * (1 - m.class_probs) / sample.n)
    assert np.all(np.abs(freq - m.class_probs) < 3 * se)
    rows = sample.logits[sample.labels == 2]
    assert np.all(rows == t.logits[-1])
    balanced = fit_class_conditional(_logits(3, [50, 50], d=2))
    np.testing.assert_allclose(balanced.class_probs, [0.5, 0.5])


def test_multivariate_fit_diagonal_fallback():
    rng = np.random.default_rng(2)
    a = rng.normal(size=(40, 1))
    x = np.c_[a, 2 * a]
    with pytest.raises(Exception):
        fit_kde_multi(x, allow_diagonal=False)
    model, diagonal = fit_kde_multi(x)
    assert diagonal
    assert model.sample(np.random.default_rng(0), 10).shape == (10, 2)


def test_multivariate_density_integrates_to_one():
    rng = np.random.default_rng(3)
    model, _ = fit_kde_multi(rng.normal(size=(30, 2)))
    g = np.linspace(-5, 5, 401)
    xx, yy = np.meshgrid(g, g)
    dens = model.pdf(np.c_[xx.ravel(), yy.ravel()])
    assert np.all(dens >= 0)
    assert dens.sum() * (g[1] - g[0]) ** 2 == pytest.approx(1.0, abs=5e-3)


def test_classification_truth_is_monte_carlo():
    m = TrueModel(fit_class_conditional(_logits(4, [30, 30, 30])))
    tv = m.add_truth(MetricEvaluator("accuracy"), draws=100_000)
    assert tv.provenance == "monte_carlo" and tv.draws == 100_000
    assert 0 < tv.se < 0.01


def test_round_trip_gives_identical_draws(tmp_path, beta_kde):
    models = [
        TrueModel(beta_kde, bounds=(0.0, 1.0)),
        TrueModel(Pmf([0.0, 1.0], [0.3, 0.7])),
        TrueModel(fit_class_conditional(_logits(5, [20, 25, 2]))),
        TrueModel(fit_kde(Sample(np.random.default_rng(1).exponential(size=50), (0, math.inf))), bounds=(0, math.inf)),
    ]
    models[0].add_truth(MEDIAN)
    for i, m in enumerate(models):
        path = tmp_path / f"m{i}.json"
        save_model(m, path)
        back = load_model(path)
        a, b = draw(m, 500, 11), draw(back, 500, 11)
        if isinstance(a, Sample):
            assert np.array_equal(a.values, b.values)
        else:
            assert np.array_equal(a.logits, b.logits) and np.array_equal(a.labels, b.labels)
        assert back.true_values == m.true_values


@given(st.lists(st.floats(0.01, 0.99), min_size=3, max_size=30, unique=True))
def test_any_fit_is_a_valid_density(xs):
    if np.std(xs) < 1e-3:
        return
    k = fit_kde(Sample(xs, (0.0, 1.0)))
    assert k.integral(0) == pytest.approx(1.0, abs=1e-9)
    assert np.all(k.bandwidths > 0)
    assert k.pdf([-1e-12, 1 + 1e-12]).tolist() == [0.0, 0.0]
    assert np.all(k.pdf(np.linspace(0, 1, 50)) >= 0)


def test_kde_validation():
    with pytest.raises(ValueError):
        Kde1D([0.1], 0.5, [1.0], [1.0], [0.5], (0.0, 1.0))
