"""Monte-Carlo coverage and width of interval methods against a true model.

Trial ``t`` draws its sample from substream ``(seed, t)`` and, for
bootstrap methods, resamples with the seed derived from ``(seed, t, 1)``;
changing the number of resamples therefore never changes the drawn
samples, and results do not depend on how trials are split across workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .distfit.truth import TrueModel, draw
from .errors import BcaDegenerate, TruthPrecisionError
from .intervals import PROPORTION_METHODS, CiSpec, ProportionCount, prop_ci
from .methods import compute_interval
from .metrics import MetricEvaluator
from .rng import derive_seed, substream

POLICIES = ("count_as_miss", "fallback_percentile", "exclude")
DEFAULT_TRIALS = 10_000
REDUCED_TRIALS = 3_500


@dataclass(frozen=True)
class CoverageRecord:
    method: str
    statistic: str
    aggregation: str
    n: int
    trials: int
    level: float
    coverage: float
    coverage_se: float
    mean_width: float
    median_width: float
    degenerate_count: int
    seed: int

    @property
    def alpha(self) -> float:
        return 1.0 - self.level

    def to_dict(self) -> dict:
        return asdict(self)


def _aggregation(stat) -> str:
    return stat.aggregation if isinstance(stat, MetricEvaluator) else "none"


def _stat_name(stat) -> str:
    return stat.metric if isinstance(stat, MetricEvaluator) else stat.name


def population_sd(model: TrueModel, stat) -> float:
    """Known SD handed to the z interval."""
    if model.is_classification:
        p = model.truth(stat).value
        return math.sqrt(p * (1.0 - p))
    return math.sqrt(model.generator.variance())


def _run_trials(model, stat, method, n, spec, seed, resamples, policy, sigma, truth, start, stop):
    count = stop - start
    contained = np.zeros(count, dtype=bool)
    widths = np.full(count, np.nan)
    degenerate = np.zeros(count, dtype=bool)
    for i, t in enumerate(range(start, stop)):
        data = draw(model, n, substream(seed, t))
        boot_seed = derive_seed(seed, t, 1)
        try:
            iv, _ = compute_interval(
                data, stat, method, spec,
                resamples=resamples, seed=boot_seed, sigma=sigma,
                fallback=policy == "fallback_percentile",
            )
        except BcaDegenerate:
            degenerate[i] = True
            continue
        if "bca_fallback" in iv.flags:
            degenerate[i] = True
        contained[i] = iv.lower <= truth <= iv.upper
        widths[i] = iv.upper - iv.lower
    return contained, widths, degenerate


def estimate_coverage(
    model: TrueModel,
    stat,
    method: str,
    n: int,
    trials: int = DEFAULT_TRIALS,
    spec: CiSpec = CiSpec(),
    seed: int = 0,
    *,
    resamples: int = 9999,
    policy: str = "count_as_miss",
    jobs: int = 1,
) -> CoverageRecord:
    """Empirical coverage and width of ``method`` for ``stat`` at sample size ``n``.

    ``policy`` decides what a degenerate BCa trial contributes:
    ``count_as_miss`` (no interval, not covered), ``fallback_percentile``
    (percentile interval on the same replicates) or ``exclude`` (dropped
    from the coverage denominator). Degenerate trials are counted in
    ``degenerate_count`` under every policy.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}")
    truth_value = model.truth(stat)
    truth = truth_value.value
    sigma = population_sd(model, stat) if method == "z" else None
    args = (model, stat, method, n, spec, seed, resamples, policy, sigma, truth)
    if jobs <= 1:
        contained, widths, degenerate = _run_trials(*args, 0, trials)
    else:
        bounds = np.linspace(0, trials, min(jobs * 4, trials) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunk, [(args, a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]))
        contained = np.concatenate([p[0] for p in parts])
        widths = np.concatenate([p[1] for p in parts])
        degenerate = np.concatenate([p[2] for p in parts])

    n_degenerate = int(degenerate.sum())
    failed = np.isnan(widths)
    denominator = trials - int(failed.sum()) if policy == "exclude" else trials
    coverage = float(contained.sum() / denominator) if denominator else float("nan")
    observed = widths[~failed]
    if truth_value.provenance == "monte_carlo" and observed.size:
        positive = observed[observed > 0]
        if positive.size and truth_value.se >= 0.1 * positive.min():
            raise TruthPrecisionError(
                f"truth SE {truth_value.se:.3g} is not below a tenth of the smallest width {positive.min():.3g}"
            )
    return CoverageRecord(
        method=method,
        statistic=_stat_name(stat),
        aggregation=_aggregation(stat),
        n=n,
        trials=trials,
        level=spec.level,
        coverage=coverage,
        coverage_se=math.sqrt(coverage * (1.0 - coverage) / denominator) if denominator else float("nan"),
        mean_width=float(observed.mean()) if observed.size else float("nan"),
        median_width=float(np.median(observed)) if observed.size else float("nan"),
        degenerate_count=n_degenerate,
        seed=seed,
    )


def _run_chunk(job):
    args, start, stop = job
    return _run_trials(*args, start, stop)


def exact_proportion_coverage(method: str, p: float, n: int, spec: CiSpec = CiSpec()) -> float:
    """Exact coverage of a proportion interval by summing over the binomial law."""
    if method not in PROPORTION_METHODS:
        raise ValueError(f"{method!r} is not a proportion method")
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    total = 0.0
    for k in range(n + 1):
        iv = prop_ci(ProportionCount(k, n), spec, method)
        if iv.lower <= p <= iv.upper:
            total += math.comb(n, k) * p ** k * (1.0 - p) ** (n - k)
    return total


def planner_z(spec: CiSpec = CiSpec(), digits: int | None = 2) -> float:
    z = float(special.ndtri(1.0 - spec.alpha / 2.0))
    return z if digits is None else round(z, digits)


def required_trials(p: float, epsilon: float = 0.01, spec: CiSpec = CiSpec(), conservative: bool = False) -> int:
    """Monte-Carlo trials so that the coverage estimate has margin ``epsilon``.

    The default follows the usual tabulation: ``z`` rounded to two decimals
    (1.96 at 95%) and ``z^2 p(1-p) / epsilon^2`` rounded to the nearest
    integer. ``conservative=True`` uses the exact quantile and the ceiling.
    """
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if conservative:
        z = planner_z(spec, None)
        return int(math.ceil(z * z * p * (1.0 - p) / epsilon ** 2))
    z = planner_z(spec, 2)
    return int(math.floor(z * z * p * (1.0 - p) / epsilon ** 2 + 0.5))
