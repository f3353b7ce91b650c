"""Adaptive Epanechnikov KDE with boundary trimming.

Procedure (1-D and multivariate alike):

1. pilot bandwidth ``H = 1.06 * Sigma^{1/2} * n^{-1/5}``;
2. pilot density ``f~(X_i)`` with the uniform pilot bandwidth;
3. ``log g`` = mean of ``log f~(X_i)``;
4. modifiers ``lambda_i = (f~(X_i) / g)^{-1/2}``;
5. trim ``alpha_i = min(dist(X_i, boundary), lambda_i)``;
6. bandwidth ``h_i = alpha_i * H``, additionally capped so that the
   kernel support of point i stays inside the bounds.

A data point lying exactly on a bound gets ``h_i = 0`` and acts as a point
mass at that bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from ..errors import InsufficientData, SingularCovariance, ZeroVariance
from ..stats_core import as_sample

PILOT_FACTOR = 1.06
_EVAL_CHUNK = 2_000_000


def epanechnikov_constant(d: int) -> float:
    return (d + 2) * gamma_fn(d / 2.0 + 1.0) / (2.0 * math.pi ** (d / 2.0))


def _kernel1(u: np.ndarray) -> np.ndarray:
    return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)


def _kernel_cdf1(u: np.ndarray) -> np.ndarray:
    u = np.clip(u, -1.0, 1.0)
    return 0.5 + 0.75 * u - 0.25 * u ** 3


def _kernel_partial_mean1(u: np.ndarray) -> np.ndarray:
    # integral of t K(t) over [-1, u]
    u = np.clip(u, -1.0, 1.0)
    return 0.375 * u * u - 0.1875 * u ** 4 - 0.1875


def epanechnikov_draws(rng: np.random.Generator, size) -> np.ndarray:
    """Exact 1-D Epanechnikov draws: median of three U(-1, 1)."""
    u = rng.uniform(-1.0, 1.0, size=(3,) + tuple(np.atleast_1d(size)))
    return np.median(u, axis=0)


def ball_epanechnikov_draws(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """Multivariate Epanechnikov draws by rejection from the unit ball."""
    out = np.empty((m, d))
    filled = 0
    while filled < m:
        k = max(16, int(1.2 * (m - filled) * (d + 2) / 2))
        g = rng.standard_normal((k, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = rng.uniform(size=k) ** (1.0 / d)
        keep = rng.uniform(size=k) < 1.0 - r * r
        acc = (g * r[:, None])[keep]
        take = min(acc.shape[0], m - filled)
        out[filled:filled + take] = acc[:take]
        filled += take
    return out


def _normalize_bounds(bounds) -> tuple[float, float] | None:
    if bounds is None:
        return None
    a, b = bounds
    a = -math.inf if a is None else float(a)
    b = math.inf if b is None else float(b)
    if not a < b:
        raise ValueError(f"bounds must satisfy a < b, got {(a, b)}")
    return a, b


@dataclass(frozen=True)
class Kde1D:
    centers: np.ndarray
    pilot_bandwidth: float
    modifiers: np.ndarray
    trimmed: np.ndarray
    bandwidths: np.ndarray
    bounds: tuple[float, float] | None = None

    def __post_init__(self):
        for name in ("centers", "modifiers", "trimmed", "bandwidths"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.centers.size
        if not (self.modifiers.size == self.trimmed.size == self.bandwidths.size == n) or n == 0:
            raise ValueError("KDE arrays must be non-empty and of equal length")
        if np.any(self.bandwidths < 0):
            raise ValueError("bandwidths must be non-negative")
        object.__setattr__(self, "bounds", _normalize_bounds(self.bounds))
        if self.bounds is not None:
            a, b = self.bounds
            tol = 1e-12 * max(1.0, float(np.max(np.abs(self.centers))))
            if np.any(self.centers - self.bandwidths < a - tol) or np.any(self.centers + self.bandwidths > b + tol):
                raise ValueError("kernel support leaves the bounds")

    @property
    def n(self) -> int:
        return self.centers.size

    @property
    def atom_mass(self) -> float:
        return float(np.mean(self.bandwidths == 0.0))

    @property
    def support(self) -> tuple[float, float]:
        return float(np.min(self.centers - self.bandwidths)), float(np.max(self.centers + self.bandwidths))

    def _chunks(self, x: np.ndarray):
        step = max(1, _EVAL_CHUNK // self.n)
        for start in range(0, x.size, step):
            yield slice(start, start + step)

    def pdf(self, x) -> np.ndarray:
        """Density of the continuous part (point masses are excluded)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        smooth = self.bandwidths > 0
        c, h = self.centers[smooth], self.bandwidths[smooth]
        out = np.empty(x.size)
        for sl in self._chunks(x):
            u = (x[sl, None] - c[None, :]) / h[None, :]
            out[sl] = np.sum(_kernel1(u) / h[None, :], axis=1) / self.n
        return out

    def _cdf_and_partial(self, x: np.ndarray, strict: bool) -> tuple[np.ndarray, np.ndarray]:
        smooth = self.bandwidths > 0
        c, h = self.centers[smooth], self.bandwidths[smooth]
        atoms = self.centers[~smooth]
        F = np.empty(x.size)
        M = np.empty(x.size)
        for sl in self._chunks(x):
            xs = x[sl, None]
            u = (xs - c[None, :]) / h[None, :]
            cdf_k = _kernel_cdf1(u)
            F[sl] = cdf_k.sum(axis=1)
            M[sl] = (cdf_k * c[None, :] + h[None, :] * _kernel_partial_mean1(u)).sum(axis=1)
            if atoms.size:
                hit = (atoms[None, :] < xs) if strict else (atoms[None, :] <= xs)
                F[sl] += hit.sum(axis=1)
                M[sl] += (hit * atoms[None, :]).sum(axis=1)
        return F / self.n, M / self.n

    def cdf(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self._cdf_and_partial(x, strict=False)[0]

    def mean(self) -> float:
        return float(np.mean(self.centers))

    def variance(self) -> float:
        # Epanechnikov kernel on [-1, 1] has variance 1/5
        return float(np.var(self.centers) + np.mean(self.bandwidths ** 2) / 5.0)

    def quantile(self, p: float) -> float:
        q = mixture_quantile(self.cdf, p, *self.support)
        # bisection lands just right of a jump; snap to the atom causing it
        atoms = self.centers[self.bandwidths == 0.0]
        near = atoms[(atoms <= q) & (q - atoms <= 1e-9 * max(1.0, abs(q)))]
        if near.size:
            a = float(near.min())
            if self.cdf(a)[0] >= p:
                return a
        return q

    def integral(self, power: int = 0) -> float:
        """``E[X^power]`` by numerical integration of the density.

        Between consecutive kernel edges the density is a quadratic, so
        three-point Gauss-Legendre per piece is exact for ``power <= 3``.
        Point masses are added separately.
        """
        smooth = self.bandwidths > 0
        edges = np.unique(np.concatenate([
            self.centers[smooth] - self.bandwidths[smooth],
            self.centers[smooth] + self.bandwidths[smooth],
        ]))
        total = 0.0
        if edges.size >= 2:
            nodes, weights = np.polynomial.legendre.leggauss(3)
            a, b = edges[:-1], edges[1:]
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            x = (mid[:, None] + half[:, None] * nodes[None, :]).reshape(-1)
            fx = (self.pdf(x) * x ** power).reshape(-1, 3)
            total = float(np.sum(half * (fx @ weights)))
        atoms = self.centers[~smooth]
        return total + float(np.sum(atoms ** power)) / self.n

    def lower_partial_integral(self, p: float) -> float:
        """Integral of the quantile function over ``[0, p]``."""
        if p <= 0.0:
            return 0.0
        q = self.quantile(p)
        F_left, M_left = self._cdf_and_partial(np.array([q]), strict=True)
        return float(M_left[0] + q * (p - F_left[0]))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.integers(self.n, size=size)
        x = self.centers[idx] + self.bandwidths[idx] * epanechnikov_draws(rng, size)
        if self.bounds is not None:
            x = np.clip(x, *self.bounds)
        return x

    def affine(self, scale: float, shift: float = 0.0) -> "Kde1D":
        """Distribution of ``scale * X + shift``."""
        if scale == 0:
            raise ValueError("scale must be non-zero")
        bounds = None
        if self.bounds is not None:
            a, b = sorted((self.bounds[0] * scale + shift, self.bounds[1] * scale + shift))
            bounds = (a, b)
        return Kde1D(
            self.centers * scale + shift,
            self.pilot_bandwidth * abs(scale),
            self.modifiers,
            self.trimmed,
            self.bandwidths * abs(scale),
            bounds,
        )


def mixture_quantile(cdf, p: float, lo: float, hi: float, tol: float = 1e-13) -> float:
    """``inf{x : F(x) >= p}`` by bisection (works with point masses)."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"quantile level {p} outside [0, 1]")
    scale = max(abs(lo), abs(hi), 1.0)
    if cdf(np.array([lo]))[0] >= p:
        return float(lo)
    while hi - lo > tol * scale:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if cdf(np.array([mid]))[0] >= p:
            hi = mid
        else:
            lo = mid
    return float(hi)


def _pilot_density_1d(x: np.ndarray, h: float) -> np.ndarray:
    n = x.size
    out = np.empty(n)
    step = max(1, _EVAL_CHUNK // n)
    for start in range(0, n, step):
        u = (x[start:start + step, None] - x[None, :]) / h
        out[start:start + step] = _kernel1(u).sum(axis=1) / (n * h)
    return out


def fit_kde(sample, bounds=None) -> Kde1D:
    """Fit the adaptive bounded KDE to a 1-D sample.

    ``bounds`` defaults to the sample's own bounds; either end may be
    infinite (``None``), in which case that side is not trimmed.
    """
    s = as_sample(sample)
    if bounds is None:
        bounds = s.bounds
    bounds = _normalize_bounds(bounds)
    x = s.values
    n = x.size
    if n < 2:
        raise InsufficientData("KDE needs at least two values")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise ZeroVariance("cannot fit a KDE to a zero-variance sample")
    pilot_h = PILOT_FACTOR * sd * n ** (-0.2)
    pilot = _pilot_density_1d(x, pilot_h)
    g = math.exp(np.mean(np.log(pilot)))
    lam = (pilot / g) ** -0.5
    if bounds is None:
        dist = np.full(n, math.inf)
    else:
        dist = np.minimum(np.abs(x - bounds[0]), np.abs(x - bounds[1]))
    alpha = np.minimum(dist, lam)
    h = np.minimum(alpha * pilot_h, dist)
    return Kde1D(x.copy(), pilot_h, lam, alpha, h, bounds)


# ---------------------------------------------------------------- multivariate


def _sqrtm_psd(cov: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(cov)
    if w.min() <= 1e-12 * max(w.max(), 0.0) or w.max() <= 0.0:
        raise SingularCovariance(f"covariance eigenvalues {w}")
    return (v * np.sqrt(w)) @ v.T


@dataclass(frozen=True)
class KdeMulti:
    centers: np.ndarray
    pilot_bandwidth: np.ndarray
    modifiers: np.ndarray
    trimmed: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.centers, dtype=float)
        if c.ndim != 2:
            raise ValueError("centers must be an n x d matrix")
        H = np.array(self.pilot_bandwidth, dtype=float).reshape(c.shape[1], c.shape[1])
        for name, arr in (("centers", c), ("pilot_bandwidth", H)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("modifiers", "trimmed"):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.size != c.shape[0]:
                raise ValueError(f"{name} length does not match centers")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("lower", "upper"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, np.array(v, dtype=float).reshape(-1))

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def mean(self) -> np.ndarray:
        return self.centers.mean(axis=0)

    def pdf(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = self.dim
        Hinv = np.linalg.inv(self.pilot_bandwidth)
        det = abs(np.linalg.det(self.pilot_bandwidth))
        cd = epanechnikov_constant(d)
        out = np.zeros(x.shape[0])
        for i in range(self.n):
            a = self.trimmed[i]
            if a == 0:
                continue
            u = (x - self.centers[i]) @ Hinv.T / a
            r2 = np.sum(u * u, axis=1)
            out += np.where(r2 <= 1.0, cd * (1.0 - r2), 0.0) / (det * a ** d)
        return out / self.n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = rng.integers(self.n, size=size)
        u = ball_epanechnikov_draws(rng, size, self.dim)
        x = self.centers[idx] + self.trimmed[idx, None] * (u @ self.pilot_bandwidth.T)
        if self.lower is not None:
            x = np.maximum(x, self.lower)
        if self.upper is not None:
            x = np.minimum(x, self.upper)
        return x


def _pilot_density_multi(x: np.ndarray, H: np.ndarray) -> np.ndarray:
    n, d = x.shape
    Hinv = np.linalg.inv(H)
    det = abs(np.linalg.det(H))
    z = x @ Hinv.T
    cd = epanechnikov_constant(d)
    out = np.empty(n)
    step = max(1, _EVAL_CHUNK // max(1, n * d))
    for start in range(0, n, step):
        diff = z[start:start + step, None, :] - z[None, :, :]
        r2 = np.sum(diff * diff, axis=2)
        out[start:start + step] = np.where(r2 <= 1.0, cd * (1.0 - r2), 0.0).sum(axis=1) / (n * det)
    return out


def fit_kde_multi(x, lower=None, upper=None, allow_diagonal: bool = True) -> tuple[KdeMulti, bool]:
    """Fit the adaptive multivariate KDE.

    Returns the model and whether the diagonal-covariance fallback was used
    (singular empirical covariance).
    """
    x = np.asarray(x, dtype=float)
    n, d = x.shape
    if n < d + 2:
        raise InsufficientData(f"multivariate KDE needs at least {d + 2} rows")
    cov = np.atleast_2d(np.cov(x, rowvar=False))
    diagonal = False
    try:
        root = _sqrtm_psd(cov)
    except SingularCovariance:
        if not allow_diagonal:
            raise
        var = np.diag(cov).copy()
        if np.all(var <= 0):
            raise
        var[var <= 0] = var[var > 0].min()
        root = np.diag(np.sqrt(var))
        diagonal = True
    H = PILOT_FACTOR * root * n ** (-0.2)
    pilot = _pilot_density_multi(x, H)
    g = math.exp(np.mean(np.log(pilot)))
    lam = (pilot / g) ** -0.5
    alpha = lam.copy()
    if lower is not None or upper is not None:
        lo = np.full(d, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        hi = np.full(d, np.inf) if upper is None else np.asarray(upper, dtype=float)
        dist = np.minimum(np.linalg.norm(x - lo, axis=1), np.linalg.norm(x - hi, axis=1))
        alpha = np.minimum(dist, lam)
        # kernel ellipsoid extends alpha * ||H_k|| along coordinate k
        reach = np.linalg.norm(H, axis=1)
        room = np.minimum(x - lo, hi - x) / reach
        alpha = np.minimum(alpha, room.min(axis=1))
    return KdeMulti(x.copy(), H, lam, alpha, lower, upper), diagonal
