"""Independent reference computations used as test oracles.

Everything here is written from first principles (enumeration, plain
loops, scipy quadrature and distributions) and shares no code with the
package under test.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate, stats


def pairwise_auc(y, s) -> float:
    """Mann-Whitney AUC by enumerating every positive/negative pair."""
    pos = [si for yi, si in zip(y, s) if yi == 1]
    neg = [si for yi, si in zip(y, s) if yi == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            total += 1.0 if p > q else 0.5 if p == q else 0.0
    return total / (len(pos) * len(neg))


def resample_means_exhaustive(x) -> list[Fraction]:
    """All n^n equally likely bootstrap means, as exact fractions."""
    n = len(x)
    xs = [Fraction(v).limit_denominator(10**9) for v in x]
    return [sum(xs[i] for i in idx) / n for idx in itertools.product(range(n), repeat=n)]


def discrete_quantile(values, p: float):
    """inf{v : P(V <= v) >= p} for equally weighted ``values``."""
    vs = sorted(values)
    m = len(vs)
    k = math.ceil(p * m)
    return vs[max(k, 1) - 1]


def exact_sign_flip_p(d) -> float:
    d = list(d)
    obs = abs(sum(d)) / len(d)
    hits = 0
    for signs in itertools.product((-1, 1), repeat=len(d)):
        t = abs(sum(s * v for s, v in zip(signs, d))) / len(d)
        hits += t >= obs - 1e-12 * max(obs, 1e-300)
    return hits / 2 ** len(d)


def exact_relabel_p(x, y) -> float:
    pooled = list(x) + list(y)
    nx = len(x)
    obs = abs(np.mean(x) - np.mean(y))
    hits = total = 0
    for grp in itertools.combinations(range(len(pooled)), nx):
        a = [pooled[i] for i in grp]
        b = [pooled[i] for i in range(len(pooled)) if i not in grp]
        hits += abs(np.mean(a) - np.mean(b)) >= obs - 1e-12 * max(obs, 1e-300)
        total += 1
    return hits / total


def binomial_coverage(interval_fn, p: float, n: int) -> float:
    """Exact coverage via scipy's binomial pmf and a caller-supplied interval."""
    cov = 0.0
    for k in range(n + 1):
        lo, hi = interval_fn(k, n)
        if lo <= p <= hi:
            cov += stats.binom.pmf(k, n, p)
    return cov


def wilson_closed_form(k: int, n: int, z: float = 1.959963984540054):
    ph = k / n
    centre = (ph + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n))
    return max(0.0, centre - half), min(1.0, centre + half)


def wald_closed_form(k: int, n: int, z: float = 1.959963984540054):
    ph = k / n
    half = z * math.sqrt(ph * (1 - ph) / n)
    return max(0.0, ph - half), min(1.0, ph + half)


def kde_pdf_loop(centers, bandwidths, x: float) -> float:
    """Plain-Python Epanechnikov mixture density at one point (smooth part)."""
    total = 0.0
    for c, h in zip(centers, bandwidths):
        if h > 0:
            u = (x - c) / h
            if abs(u) < 1:
                total += 0.75 * (1 - u * u) / h
    return total / len(centers)


def quad_moments(centers, bandwidths):
    """(mass, first moment, second moment) of the smooth part by adaptive quadrature."""
    edges = sorted({c - h for c, h in zip(centers, bandwidths) if h > 0}
                   | {c + h for c, h in zip(centers, bandwidths) if h > 0})
    out = []
    for power in (0, 1, 2):
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            total += integrate.quad(lambda t: t ** power * kde_pdf_loop(centers, bandwidths, t), a, b,
                                    epsabs=1e-13, epsrel=1e-12)[0]
        out.append(total)
    return tuple(out)


def dkw_epsilon(n: int, confidence: float) -> float:
    return math.sqrt(math.log(2.0 / (1.0 - confidence)) / (2.0 * n))


def hoeffding_coefficient(alpha: float = 0.05) -> float:
    """Width of the Hoeffding interval times sqrt(n), on [0, 1]."""
    return 2.0 * math.sqrt(math.log(2.0 / alpha) / 2.0)


def bernstein_coefficients(alpha: float = 0.05) -> tuple[float, float]:
    """Width = c1 * sigma / sqrt(n) + c2 / (n - 1) on [0, 1]."""
    lg = math.log(4.0 / alpha)
    return 2.0 * math.sqrt(2.0 * lg), 2.0 * 7.0 * lg / 3.0
