"""Empirical probability mass functions for discrete-valued metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..stats_core import as_sample

# cumulative-sum slack when locating a quantile
_CUM_TOL = 1e-12


@dataclass(frozen=True)
class Pmf:
    support: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        x = np.array(self.support, dtype=float).reshape(-1)
        p = np.array(self.probabilities, dtype=float).reshape(-1)
        if x.size == 0 or x.size != p.size:
            raise ValueError("support and probabilities must be non-empty and aligned")
        if np.any(np.diff(x) <= 0):
            raise ValueError("support must be sorted ascending with distinct values")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probabilities must be non-negative and sum to 1")
        for name, arr in (("support", x), ("probabilities", p)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def mean(self) -> float:
        return float(np.dot(self.support, self.probabilities))

    def variance(self) -> float:
        c = self.support - self.mean()
        return float(np.dot(c * c, self.probabilities))

    def cdf(self, x) -> np.ndarray:
        cum = np.cumsum(self.probabilities)
        idx = np.searchsorted(self.support, np.atleast_1d(x), side="right")
        return np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)

    def quantile(self, p: float) -> float:
        """``inf{x : F(x) >= p}``."""
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"quantile level {p} outside [0, 1]")
        cum = np.cumsum(self.probabilities)
        k = int(np.searchsorted(cum, p - _CUM_TOL, side="left"))
        return float(self.support[min(k, self.support.size - 1)])

    def lower_partial_integral(self, p: float) -> float:
        """Integral of the quantile function over ``[0, p]``."""
        if p <= 0.0:
            return 0.0
        q = self.quantile(p)
        below = self.support < q
        F_left = float(self.probabilities[below].sum())
        return float(np.dot(self.support[below], self.probabilities[below]) + q * (p - F_left))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.support.size == 1:
            return np.full(size, self.support[0])
        return self.support[rng.choice(self.support.size, size=size, p=self.probabilities)]


def fit_pmf(sample) -> Pmf:
    values, counts = np.unique(as_sample(sample).values, return_counts=True)
    return Pmf(values, counts / counts.sum())
