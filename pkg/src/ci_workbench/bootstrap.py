"""Percentile, basic and BCa bootstrap intervals.

Replicate ``b`` resamples indices from the counter-based substream
``(seed, b)`` (see :func:`ci_workbench.rng.resample_indices`), so a
replicate vector is reproducible and independent of chunking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .errors import BcaDegenerate, InsufficientData, MetricUndefined, StatisticUndefinedOnResample
from .intervals import BCA_FALLBACK, CiSpec, Interval, is_constant, make_interval, point_interval
from .metrics import LogitTable, MetricEvaluator, evaluate_arrays, predict
from .rng import resample_indices
from .stats_core import StatisticKind, as_sample, sorted_quantile, summary_rows

BOOTSTRAP_METHODS = ("percentile", "basic", "bca")
EXHAUSTIVE_MAX_N = 8
# cap on resample matrix size per chunk (elements)
_CHUNK_ELEMENTS = 2_000_000
# jackknife spread below this fraction of the values' magnitude is rounding noise
BCA_RELATIVE_SPREAD = 1e-12

Statistic = Union[StatisticKind, MetricEvaluator]


@dataclass(frozen=True)
class BootstrapPlan:
    resamples: int = 9999
    method: str = "percentile"
    seed: int = 0
    exhaustive: bool = False

    def __post_init__(self):
        if self.resamples < 1:
            raise ValueError("resamples must be >= 1")
        if self.method not in BOOTSTRAP_METHODS:
            raise ValueError(f"unknown bootstrap method {self.method!r}")


@dataclass(frozen=True)
class BcaDiagnostics:
    z0: float
    accel: float
    alpha1: float
    alpha2: float


class _Evaluator:
    """Evaluates a statistic on many index sets of one dataset."""

    def __init__(self, data, stat: Statistic):
        self.stat = stat
        if isinstance(stat, MetricEvaluator):
            if not isinstance(data, LogitTable):
                raise TypeError("metric statistics need a LogitTable")
            self.labels = data.labels
            self.preds, self.scores = predict(data)
            self.d = data.num_classes
            self.n = data.n
            self.values = None
        else:
            sample = as_sample(data)
            self.values = sample.values
            self.n = sample.n

    def full(self) -> float:
        if self.values is not None:
            return float(summary_rows(self.values[None, :], self.stat)[0])
        return self._metric(slice(None))

    def _metric(self, idx) -> float:
        value, _ = evaluate_arrays(self.labels[idx], self.preds[idx], self.scores[idx], self.d, self.stat)
        return value

    def rows(self, idx: np.ndarray, offset: int = 0) -> np.ndarray:
        if self.values is not None:
            return summary_rows(self.values[idx], self.stat)
        out = np.empty(idx.shape[0])
        for r in range(idx.shape[0]):
            try:
                out[r] = self._metric(idx[r])
            except MetricUndefined as exc:
                raise StatisticUndefinedOnResample(offset + r, exc) from exc
        return out

    def is_constant(self) -> bool:
        return self.values is not None and is_constant(self.values)


def exhaustive_indices(n: int) -> np.ndarray:
    """All ``n**n`` ordered resamples, one per row."""
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive enumeration limited to n <= {EXHAUSTIVE_MAX_N}")
    grids = np.indices((n,) * n).reshape(n, -1)
    return grids.T.copy()


def _replicates(ev: _Evaluator, plan: BootstrapPlan) -> np.ndarray:
    n = ev.n
    if plan.exhaustive:
        idx = exhaustive_indices(n)
        out = np.empty(idx.shape[0])
        step = max(1, _CHUNK_ELEMENTS // n)
        for start in range(0, idx.shape[0], step):
            out[start:start + step] = ev.rows(idx[start:start + step], start)
        return out
    out = np.empty(plan.resamples)
    step = max(1, _CHUNK_ELEMENTS // n)
    for start in range(0, plan.resamples, step):
        stop = min(start + step, plan.resamples)
        out[start:stop] = ev.rows(resample_indices(plan.seed, n, start, stop), start)
    return out


def bootstrap_replicates(data, stat: Statistic, plan: BootstrapPlan) -> np.ndarray:
    """Replicate statistic values (``n**n`` of them in exhaustive mode)."""
    return _replicates(_Evaluator(data, stat), plan)


def jackknife_values(data, stat: Statistic) -> np.ndarray:
    ev = _Evaluator(data, stat)
    return _jackknife(ev)


def _jackknife(ev: _Evaluator) -> np.ndarray:
    n = ev.n
    if n < 2:
        raise InsufficientData("jackknife needs at least two observations")
    # row i drops observation i
    idx = np.array([np.r_[0:i, i + 1:n] for i in range(n)])
    try:
        return ev.rows(idx)
    except StatisticUndefinedOnResample as exc:
        raise BcaDegenerate(f"statistic undefined on jackknife sample {exc.index}") from exc


def bias_constant(replicates: np.ndarray, estimate: float) -> float:
    """z0 from the mid-rank proportion of replicates below the estimate."""
    below = np.count_nonzero(replicates < estimate)
    equal = np.count_nonzero(replicates == estimate)
    p = (below + 0.5 * equal) / replicates.size
    if p <= 0.0 or p >= 1.0:
        raise BcaDegenerate(f"all bootstrap replicates on one side of the estimate (p={p})")
    return float(special.ndtri(p))


def acceleration(jack: np.ndarray) -> float:
    diff = jack.mean() - jack
    ss = float(np.sum(diff ** 2))
    scale = float(np.max(np.abs(jack)))
    if ss == 0.0 or math.sqrt(ss / jack.size) <= BCA_RELATIVE_SPREAD * scale:
        raise BcaDegenerate("jackknife sum of squares is zero; acceleration undefined")
    return float(np.sum(diff ** 3) / (6.0 * ss ** 1.5))


def bca_levels(z0: float, accel: float, alpha: float) -> tuple[float, float]:
    if z0 == 0.0 and accel == 0.0:
        return alpha / 2.0, 1.0 - alpha / 2.0
    out = []
    for q in (alpha / 2.0, 1.0 - alpha / 2.0):
        zq = special.ndtri(q)
        out.append(float(special.ndtr(z0 + (z0 + zq) / (1.0 - accel * (z0 + zq)))))
    if not all(0.0 < v < 1.0 for v in out) or not out[0] < out[1]:
        raise BcaDegenerate(f"BCa quantile levels {out} are unusable")
    return out[0], out[1]


def replicate_quantiles(replicates: np.ndarray, levels) -> list[float]:
    srt = np.sort(replicates)
    return [float(sorted_quantile(srt, q)) for q in levels]


def interval_from_replicates(
    replicates: np.ndarray,
    estimate: float,
    method: str,
    spec: CiSpec,
    jack: np.ndarray | None = None,
) -> tuple[Interval, BcaDiagnostics | None]:
    alpha = spec.alpha
    if method == "percentile":
        lo, hi = replicate_quantiles(replicates, (alpha / 2.0, 1.0 - alpha / 2.0))
        return make_interval(lo, hi, estimate, method, spec.level), None
    if method == "basic":
        lo, hi = replicate_quantiles(replicates, (alpha / 2.0, 1.0 - alpha / 2.0))
        return make_interval(2.0 * estimate - hi, 2.0 * estimate - lo, estimate, method, spec.level), None
    if method != "bca":
        raise ValueError(f"unknown bootstrap method {method!r}")
    if jack is None:
        raise ValueError("BCa needs jackknife values")
    z0 = bias_constant(replicates, estimate)
    a = acceleration(jack)
    a1, a2 = bca_levels(z0, a, alpha)
    lo, hi = replicate_quantiles(replicates, (a1, a2))
    return make_interval(lo, hi, estimate, method, spec.level), BcaDiagnostics(z0, a, a1, a2)


def bootstrap_ci(
    data,
    stat: Statistic,
    plan: BootstrapPlan = BootstrapPlan(),
    spec: CiSpec = CiSpec(),
    fallback: bool = False,
) -> tuple[Interval, BcaDiagnostics | None]:
    """Bootstrap interval for ``stat``.

    A zero-variance sample yields a point interval flagged
    ``degenerate_point``. A degenerate BCa computation raises
    :class:`BcaDegenerate` unless ``fallback`` is set, in which case the
    percentile interval on the same replicates is returned with the
    ``bca_fallback`` flag.
    """
    ev = _Evaluator(data, stat)
    estimate = ev.full()
    if ev.is_constant():
        return point_interval(estimate, plan.method, spec.level), None
    replicates = _replicates(ev, plan)
    if plan.method != "bca":
        return interval_from_replicates(replicates, estimate, plan.method, spec)
    try:
        return interval_from_replicates(replicates, estimate, "bca", spec, _jackknife(ev))
    except BcaDegenerate:
        if not fallback:
            raise
        iv, _ = interval_from_replicates(replicates, estimate, "percentile", spec)
        return make_interval(iv.lower, iv.upper, estimate, "bca", spec.level, {BCA_FALLBACK}), None
