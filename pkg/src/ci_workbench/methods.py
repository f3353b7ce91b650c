"""Single entry point mapping (data, statistic, method tag) to an interval."""
from __future__ import annotations

import numpy as np

from .bootstrap import BOOTSTRAP_METHODS, BcaDiagnostics, BootstrapPlan, bootstrap_ci
from .errors import IncompatibleMethod
from .intervals import (
    PROPORTION_METHODS,
    CiSpec,
    Interval,
    empirical_bernstein_ci,
    hoeffding_ci,
    is_constant,
    mean_ci_t,
    mean_ci_z,
    point_interval,
    prop_ci,
    proportion_count,
)
from .metrics import LogitTable, MetricEvaluator, predict
from .stats_core import MEAN, Sample, StatisticKind

MEAN_METHODS = ("z", "t", "hoeffding", "empirical_bernstein")
ALL_METHODS = MEAN_METHODS + PROPORTION_METHODS + BOOTSTRAP_METHODS


def parse_statistic(text: str, logits: bool = False) -> StatisticKind | MetricEvaluator:
    if logits:
        return MetricEvaluator.parse(text)
    return StatisticKind.parse(text)


def statistic_name(stat) -> str:
    return stat.name


def correctness_sample(table: LogitTable) -> Sample:
    """Per-row 0/1 correctness; its mean is the accuracy."""
    preds, _ = predict(table)
    return Sample((preds == table.labels).astype(float), (0.0, 1.0))


def is_compatible(stat, method: str, binary: bool | None = None) -> bool:
    """Whether ``method`` applies to ``stat``; ``binary`` says if 1-D data are 0/1 (None: unknown)."""
    if method in BOOTSTRAP_METHODS:
        return True
    if isinstance(stat, MetricEvaluator):
        return stat.metric == "accuracy"
    if stat != MEAN:
        return False
    if method in PROPORTION_METHODS:
        return binary is not False
    return True


def _mean_like(data, stat) -> Sample:
    if isinstance(data, LogitTable):
        if not (isinstance(stat, MetricEvaluator) and stat.metric == "accuracy"):
            raise IncompatibleMethod(f"closed-form intervals on logits only cover accuracy, not {stat}")
        return correctness_sample(data)
    if stat != MEAN:
        raise IncompatibleMethod(f"closed-form intervals are for the mean, not {stat}")
    return data


def compute_interval(
    data,
    stat,
    method: str,
    spec: CiSpec = CiSpec(),
    *,
    resamples: int = 9999,
    seed: int = 0,
    sigma: float | None = None,
    fallback: bool = False,
) -> tuple[Interval, BcaDiagnostics | None]:
    """Dispatch to the interval construction named by ``method``.

    ``sigma`` is only used by the z interval; when omitted the sample SD
    stands in for the known population SD.
    """
    if method in BOOTSTRAP_METHODS:
        plan = BootstrapPlan(resamples=resamples, method=method, seed=seed)
        return bootstrap_ci(data, stat, plan, spec, fallback=fallback)
    if method not in ALL_METHODS:
        raise IncompatibleMethod(f"unknown method {method!r}")
    sample = _mean_like(data, stat)
    if method in PROPORTION_METHODS:
        return prop_ci(proportion_count(sample), spec, method), None
    if method == "t":
        return mean_ci_t(sample, spec), None
    if method == "z":
        if sigma is None:
            x = sample.values
            sigma = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        if sigma == 0.0 and is_constant(sample.values):
            return point_interval(float(sample.values[0]), "z", spec.level), None
        return mean_ci_z(sample, sigma, spec), None
    if method == "hoeffding":
        return hoeffding_ci(sample, spec), None
    return empirical_bernstein_ci(sample, spec), None
