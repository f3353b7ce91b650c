"""Coverage convergence pace and permutation tests on it.

The pace ``beta`` parameterizes coverage as ``0.95 + beta / n``; it is
fitted by least squares through the fixed intercept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDesign

NOMINAL = 0.95
DEFAULT_PERMUTATIONS = 50_000
# |T*| >= |T_obs| up to this relative slack (floating sums of permuted data)
_TIE_RTOL = 1e-12
_CHUNK = 10_000


@dataclass(frozen=True)
class CcpFit:
    pace: float
    relative_error: float
    points: tuple
    nominal: float = NOMINAL

    def predict(self, n) -> np.ndarray:
        return self.nominal + self.pace / np.asarray(n, dtype=float)


def fit_ccp(points, nominal: float = NOMINAL) -> CcpFit:
    """Least-squares pace from ``(n, coverage)`` pairs."""
    pts = tuple((float(n), float(y)) for n, y in points)
    n = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    if np.unique(n).size < 2:
        raise DegenerateDesign("need at least two distinct sample sizes")
    x = 1.0 / n
    beta = float(np.dot(x, y - nominal) / np.dot(x, x))
    resid = y - (nominal + beta * x)
    rel = math.sqrt(float(np.sum(resid ** 2)) / float(np.sum(y ** 2)))
    return CcpFit(beta, rel, pts, nominal)


def pace_standard_error(fit: CcpFit) -> float:
    n = np.array([p[0] for p in fit.points])
    y = np.array([p[1] for p in fit.points])
    x = 1.0 / n
    resid = y - fit.predict(n)
    dof = n.size - 1
    return math.sqrt(float(np.sum(resid ** 2)) / dof / float(np.dot(x, x)))


@dataclass(frozen=True)
class PermutationResult:
    statistic_obs: float
    p_value: float
    permutations: int
    mode: str


def _exceed_count(t_star: np.ndarray, t_obs: float) -> int:
    thresh = abs(t_obs) * (1.0 - _TIE_RTOL)
    return int(np.count_nonzero(np.abs(t_star) >= thresh))


def paired_sign_flip_test(differences, permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0) -> PermutationResult:
    """Two-sided sign-flip test of a zero mean paired difference."""
    d = np.asarray(differences, dtype=float).reshape(-1)
    if d.size == 0:
        raise ValueError("no differences")
    t_obs = float(d.mean())
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, permutations, _CHUNK):
        m = min(_CHUNK, permutations - start)
        signs = rng.integers(0, 2, size=(m, d.size)) * 2 - 1
        hits += _exceed_count((signs * d).mean(axis=1), t_obs)
    return PermutationResult(t_obs, hits / permutations, permutations, "paired_sign_flip")


def unpaired_permutation_test(x, y, permutations: int = DEFAULT_PERMUTATIONS, seed: int = 0) -> PermutationResult:
    """Two-sided label-permutation test of equal means."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size == 0 or y.size == 0:
        raise ValueError("both groups must be non-empty")
    t_obs = float(x.mean() - y.mean())
    # canonical group order, so swapping x and y only negates T_obs
    if (y.size, tuple(np.sort(y))) < (x.size, tuple(np.sort(x))):
        x, y = y, x
    pooled = np.concatenate([x, y])
    rng = np.random.default_rng(seed)
    hits = 0
    for start in range(0, permutations, _CHUNK):
        m = min(_CHUNK, permutations - start)
        perm = rng.permuted(np.broadcast_to(pooled, (m, pooled.size)), axis=1)
        t_star = perm[:, :x.size].mean(axis=1) - perm[:, x.size:].mean(axis=1)
        hits += _exceed_count(t_star, t_obs)
    return PermutationResult(t_obs, hits / permutations, permutations, "unpaired_label")
