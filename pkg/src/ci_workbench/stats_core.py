"""Summary statistics, sample quantiles and shape diagnostics.

All quantiles use linear interpolation between order statistics at rank
``1 + q*(n-1)`` (numpy's default "linear" rule). The same convention is
used for sample medians, IQRs and bootstrap percentile extraction.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptySample,
    InsufficientData,
    QOutOfRange,
    SingularCovariance,
)

Bounds = tuple[float, float]


@dataclass(frozen=True)
class Sample:
    """Per-case metric values with an optional support ``(a, b)``.

    ``b`` may be ``inf`` for metrics with only a hard floor (distances).
    """

    values: np.ndarray
    bounds: Bounds | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        if arr.size == 0:
            raise EmptySample("sample has no values")
        if not np.all(np.isfinite(arr)):
            raise ValueError("sample values must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.bounds is not None:
            a, b = (float(v) for v in self.bounds)
            if not a < b:
                raise ValueError(f"bounds must satisfy a < b, got {(a, b)}")
            if arr.min() < a or arr.max() > b:
                raise ValueError(f"values fall outside bounds {(a, b)}")
            object.__setattr__(self, "bounds", (a, b))

    def __len__(self) -> int:
        return self.values.size

    @property
    def n(self) -> int:
        return self.values.size

    def shifted(self, c: float) -> "Sample":
        bounds = None if self.bounds is None else (self.bounds[0] + c, self.bounds[1] + c)
        return Sample(self.values + c, bounds)


def as_sample(data, bounds: Bounds | None = None) -> Sample:
    if isinstance(data, Sample):
        return data
    return Sample(np.asarray(data, dtype=float), bounds)


_TRIMMED_RE = re.compile(r"^trimmed_mean\(\s*([0-9.eE+-]+)\s*\)$")


@dataclass(frozen=True)
class StatisticKind:
    tag: str
    fraction: float = 0.0

    TAGS = ("mean", "median", "trimmed_mean", "sd", "iqr")

    def __post_init__(self):
        if self.tag not in self.TAGS:
            raise ValueError(f"unknown statistic {self.tag!r}")
        if self.tag == "trimmed_mean":
            if not 0.0 <= self.fraction < 0.5:
                raise ValueError("trim fraction must lie in [0, 0.5)")
        elif self.fraction != 0.0:
            raise ValueError(f"{self.tag} takes no fraction")

    @classmethod
    def parse(cls, text: str) -> "StatisticKind":
        text = text.strip().lower()
        if text == "iqm":
            return cls("trimmed_mean", 0.25)
        m = _TRIMMED_RE.match(text)
        if m:
            return cls("trimmed_mean", float(m.group(1)))
        return cls(text)

    @property
    def name(self) -> str:
        if self.tag == "trimmed_mean":
            return f"trimmed_mean({self.fraction:g})"
        return self.tag

    def __str__(self) -> str:
        return self.name

    @property
    def location(self) -> bool:
        """Shift-equivariant statistics (as opposed to scale measures)."""
        return self.tag in ("mean", "median", "trimmed_mean")


MEAN = StatisticKind("mean")
MEDIAN = StatisticKind("median")
SD = StatisticKind("sd")
IQR = StatisticKind("iqr")
IQM = StatisticKind("trimmed_mean", 0.25)


def _check_q(q: float) -> None:
    if not (0.0 <= q <= 1.0):
        raise QOutOfRange(f"quantile level {q} outside [0, 1]")


def sorted_quantile(sorted_rows: np.ndarray, q: float) -> np.ndarray:
    """Quantile of each row of an already-sorted ``(..., n)`` array."""
    _check_q(q)
    n = sorted_rows.shape[-1]
    h = q * (n - 1)
    lo = int(math.floor(h))
    frac = h - lo
    if lo >= n - 1:
        return sorted_rows[..., n - 1]
    lower = sorted_rows[..., lo]
    if frac == 0.0:
        return lower
    return lower + frac * (sorted_rows[..., lo + 1] - lower)


def quantile(sample, q: float) -> float:
    x = as_sample(sample).values
    return float(sorted_quantile(np.sort(x), q))


def row_mean(rows: np.ndarray) -> np.ndarray:
    """Mean along the last axis, anchored at the first element.

    ``x0 + mean(x - x0)`` is exact for constant rows, where a plain
    floating-point mean may be off by an ulp.
    """
    x0 = rows[..., :1]
    return x0[..., 0] + (rows - x0).mean(axis=-1)


def summary_rows(rows: np.ndarray, kind: StatisticKind) -> np.ndarray:
    """Evaluate ``kind`` on every row of a 2-D array (one sample per row)."""
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[-1]
    if n == 0:
        raise EmptySample("empty rows")
    tag = kind.tag
    if tag == "mean":
        return row_mean(rows)
    if tag == "sd":
        if n < 2:
            raise InsufficientData("sd needs at least two values")
        return rows.std(axis=-1, ddof=1)
    if tag == "trimmed_mean":
        g = int(math.floor(kind.fraction * n))
        if g == 0:
            return row_mean(rows)
        return row_mean(np.sort(rows, axis=-1)[..., g:n - g])
    srt = np.sort(rows, axis=-1)
    if tag == "median":
        return sorted_quantile(srt, 0.5)
    return sorted_quantile(srt, 0.75) - sorted_quantile(srt, 0.25)


def summary(sample, kind: StatisticKind | str) -> float:
    if isinstance(kind, str):
        kind = StatisticKind.parse(kind)
    x = as_sample(sample).values
    return float(summary_rows(x[None, :], kind)[0])


@dataclass(frozen=True)
class MomentReport:
    """Empirical shape diagnostics.

    For multivariate data ``mean`` and ``sd`` are per-coordinate arrays and
    skewness/kurtosis are computed on the whitened vector
    ``Y = (X - mu) Sigma^{-1/2}``: skewness is ``E[(sum_i Y_i)^3]`` and
    kurtosis ``E[||Y||^4]``.
    """

    mean: float | np.ndarray
    sd: float | np.ndarray
    skewness: float
    kurtosis: float
    dimension: int = 1


def _inv_sqrt_psd(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    if w.min() <= 1e-12 * max(w.max(), 0.0) or w.max() <= 0.0:
        raise SingularCovariance(f"covariance eigenvalues {w}")
    return (v / np.sqrt(w)) @ v.T


def moments(data) -> MomentReport:
    """Biased (1/n) moment estimates of a 1-D sample or an n x d array.

    A :class:`~ci_workbench.metrics.LogitTable` is accepted and its logit
    matrix is used.
    """
    logits = getattr(data, "logits", None)
    if logits is not None:
        data = logits
    if isinstance(data, Sample):
        x = data.values[:, None]
    else:
        x = np.asarray(data, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
    n, d = x.shape
    if d == 1:
        if n < 3:
            raise InsufficientData("moments need at least 3 values")
        v = x[:, 0]
        mu = v.mean()
        c = v - mu
        var = np.mean(c ** 2)
        if var == 0.0:
            raise SingularCovariance("zero variance")
        skew = float(np.mean(c ** 3)) / var ** 1.5
        kurt = float(np.mean(c ** 4)) / var ** 2
        return MomentReport(float(mu), math.sqrt(var), skew, kurt, 1)
    if n < d + 2:
        raise InsufficientData(f"need at least {d + 2} rows for dimension {d}")
    mu = x.mean(axis=0)
    c = x - mu
    cov = c.T @ c / n
    y = c @ _inv_sqrt_psd(cov)
    skew = float(np.mean(y.sum(axis=1) ** 3))
    kurt = float(np.mean(np.sum(y ** 2, axis=1) ** 2))
    return MomentReport(mu, np.sqrt(np.diag(cov)), skew, kurt, d)
