"""Closed-form confidence intervals: z/t for the mean, binomial proportions,
and concentration-inequality bounds.

Normal, Student and Beta quantiles come from ``scipy.special`` (Cephes
routines, accurate to well beyond 10 significant digits).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import IncompatibleMethod, InsufficientData, MissingBounds, NonPositiveSigma
from .stats_core import Sample, as_sample, row_mean

DEGENERATE_POINT = "degenerate_point"
CLIPPED_TO_BOUNDS = "clipped_to_bounds"
BCA_FALLBACK = "bca_fallback"

PROPORTION_METHODS = ("wald", "wilson", "agresti_coull", "clopper_pearson")

# overshoot below this is rounding noise, not a real clip
_CLIP_TOL = 1e-12


@dataclass(frozen=True)
class CiSpec:
    level: float = 0.95

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"confidence level must lie in (0, 1), got {self.level}")

    @classmethod
    def from_alpha(cls, alpha: float) -> "CiSpec":
        return cls(1.0 - alpha)

    @property
    def alpha(self) -> float:
        # strip the representation error of 1 - level (0.050000000000000044)
        return round(1.0 - self.level, 15)

    @property
    def z(self) -> float:
        """Two-sided normal critical value z_{1-alpha/2}."""
        return float(special.ndtri(1.0 - self.alpha / 2.0))


@dataclass(frozen=True)
class Interval:
    lower: float
    upper: float
    estimate: float
    method: str
    level: float
    flags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        object.__setattr__(self, "flags", frozenset(self.flags))

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "level": self.level,
            "estimate": self.estimate,
            "lower": self.lower,
            "upper": self.upper,
            "flags": sorted(self.flags),
        }


def make_interval(lower, upper, estimate, method, level, flags=()) -> Interval:
    lower, upper = float(lower), float(upper)
    flags = set(flags)
    if upper == lower:
        flags.add(DEGENERATE_POINT)
    return Interval(lower, upper, float(estimate), method, level, frozenset(flags))


def point_interval(value: float, method: str, level: float, flags=()) -> Interval:
    return make_interval(value, value, value, method, level, set(flags) | {DEGENERATE_POINT})


def is_constant(x: np.ndarray) -> bool:
    return bool(x.size > 0 and np.all(x == x[0]))


@dataclass(frozen=True)
class ProportionCount:
    successes: int
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.successes <= self.trials:
            raise ValueError("successes must lie in [0, trials]")

    @property
    def p_hat(self) -> float:
        return self.successes / self.trials


def t_quantile(df: float, p: float) -> float:
    return float(special.stdtrit(df, p))


def mean_ci_z(sample, sigma: float, spec: CiSpec = CiSpec()) -> Interval:
    """Known-variance normal interval ``mean +/- z sigma / sqrt(n)``."""
    if not sigma > 0:
        raise NonPositiveSigma(f"sigma must be positive, got {sigma}")
    x = as_sample(sample).values
    m = float(row_mean(x))
    half = sigma * spec.z / math.sqrt(x.size)
    return make_interval(m - half, m + half, m, "z", spec.level)


def mean_ci_t(sample, spec: CiSpec = CiSpec()) -> Interval:
    x = as_sample(sample).values
    n = x.size
    if n < 2:
        raise InsufficientData("t interval needs at least two values")
    m = float(row_mean(x))
    if is_constant(x):
        return point_interval(m, "t", spec.level)
    s = float(x.std(ddof=1))
    half = t_quantile(n - 1, 1.0 - spec.alpha / 2.0) * s / math.sqrt(n)
    return make_interval(m - half, m + half, m, "t", spec.level)


def _clip01(lo: float, hi: float, flags: set) -> tuple[float, float]:
    if lo < -_CLIP_TOL or hi > 1.0 + _CLIP_TOL:
        flags.add(CLIPPED_TO_BOUNDS)
    return min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)


def prop_ci(count: ProportionCount, spec: CiSpec = CiSpec(), method: str = "wilson") -> Interval:
    x, n = count.successes, count.trials
    p = x / n
    z = spec.z
    flags: set = set()
    if method == "wald":
        half = z * math.sqrt(p * (1.0 - p) / n)
        lo, hi = p - half, p + half
    elif method == "agresti_coull":
        n_t = n + z * z
        p_t = (x + z * z / 2.0) / n_t
        half = z * math.sqrt(p_t * (1.0 - p_t) / n_t)
        lo, hi = p_t - half, p_t + half
    elif method == "wilson":
        denom = 1.0 + z * z / n
        center = (p + z * z / (2.0 * n)) / denom
        half = z / denom * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n))
        lo, hi = center - half, center + half
    elif method == "clopper_pearson":
        a2 = spec.alpha / 2.0
        lo = 0.0 if x == 0 else float(special.betaincinv(x, n - x + 1, a2))
        hi = 1.0 if x == n else float(special.betaincinv(x + 1, n - x, 1.0 - a2))
    else:
        raise ValueError(f"unknown proportion method {method!r}")
    lo, hi = _clip01(lo, hi, flags)
    return make_interval(lo, hi, p, method, spec.level, flags)


def proportion_count(sample) -> ProportionCount:
    """Success count of a 0/1 sample; raises IncompatibleMethod otherwise."""
    x = as_sample(sample).values
    if not np.all((x == 0.0) | (x == 1.0)):
        raise IncompatibleMethod("proportion intervals need binary (0/1) data")
    return ProportionCount(int(x.sum()), int(x.size))


def _require_bounds(sample: Sample) -> tuple[float, float]:
    if sample.bounds is None or not all(math.isfinite(v) for v in sample.bounds):
        raise MissingBounds("concentration intervals need finite support bounds")
    return sample.bounds


def hoeffding_half_width(n: int, alpha: float, span: float = 1.0) -> float:
    return span * math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def bernstein_half_width(sd01: float, n: int, alpha: float, span: float = 1.0) -> float:
    """Empirical Bernstein half-width; ``sd01`` is the SD of the [0,1]-rescaled data."""
    log_term = math.log(4.0 / alpha)
    return span * (sd01 * math.sqrt(2.0 * log_term / n) + 7.0 * log_term / (3.0 * (n - 1)))


def hoeffding_ci(sample, spec: CiSpec = CiSpec()) -> Interval:
    s = as_sample(sample)
    a, b = _require_bounds(s)
    x = s.values
    m = float(row_mean(x))
    if is_constant(x):
        return point_interval(m, "hoeffding", spec.level)
    half = hoeffding_half_width(x.size, spec.alpha, b - a)
    return make_interval(m - half, m + half, m, "hoeffding", spec.level)


def empirical_bernstein_ci(sample, spec: CiSpec = CiSpec()) -> Interval:
    s = as_sample(sample)
    a, b = _require_bounds(s)
    x = s.values
    if x.size < 2:
        raise InsufficientData("empirical Bernstein needs at least two values")
    m = float(row_mean(x))
    if is_constant(x):
        return point_interval(m, "empirical_bernstein", spec.level)
    sd01 = float(((x - a) / (b - a)).std(ddof=1))
    half = bernstein_half_width(sd01, x.size, spec.alpha, b - a)
    return make_interval(m - half, m + half, m, "empirical_bernstein", spec.level)
