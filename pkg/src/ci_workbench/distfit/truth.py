"""Fitted "true" distributions and their exact statistic values."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from ..errors import MissingTruth
from ..metrics import MetricEvaluator, evaluate
from ..rng import substream
from ..stats_core import Sample, StatisticKind
from .classcond import ClassConditionalModel
from .kde import Kde1D
from .pmf import Pmf

Generator = Union[Kde1D, Pmf, ClassConditionalModel]

TRUTH_DRAWS = 1_000_000
TRUTH_SEED = 0x5EED
TRUTH_BATCHES = 20


@dataclass(frozen=True)
class TruthValue:
    value: float
    provenance: str = "analytic"
    draws: int | None = None
    se: float | None = None

    def to_dict(self) -> dict:
        out = {"value": self.value, "provenance": self.provenance}
        if self.provenance == "monte_carlo":
            out.update(draws=self.draws, se=self.se)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TruthValue":
        return cls(float(d["value"]), d.get("provenance", "analytic"), d.get("draws"), d.get("se"))


@dataclass
class TrueModel:
    generator: Generator
    true_values: dict = field(default_factory=dict)
    bounds: tuple | None = None

    @property
    def is_classification(self) -> bool:
        return isinstance(self.generator, ClassConditionalModel)

    def truth(self, stat) -> TruthValue:
        key = stat if isinstance(stat, str) else stat.name
        if key not in self.true_values:
            raise MissingTruth(f"model has no true value for {key!r}")
        return self.true_values[key]

    def add_truth(self, stat, **kwargs) -> TruthValue:
        tv = true_statistic(self, stat, **kwargs)
        self.true_values[stat.name] = tv
        return tv


def _univariate_truth(gen, stat: StatisticKind) -> float:
    if stat.tag == "mean":
        return gen.mean()
    if stat.tag == "sd":
        return math.sqrt(gen.variance())
    if stat.tag == "median":
        return gen.quantile(0.5)
    if stat.tag == "iqr":
        return gen.quantile(0.75) - gen.quantile(0.25)
    f = stat.fraction
    if f == 0.0:
        return gen.mean()
    upper = gen.lower_partial_integral(1.0 - f)
    lower = gen.lower_partial_integral(f)
    return (upper - lower) / (1.0 - 2.0 * f)


def true_statistic(
    model: TrueModel,
    stat,
    draws: int = TRUTH_DRAWS,
    seed: int = TRUTH_SEED,
    batches: int = TRUTH_BATCHES,
) -> TruthValue:
    """True value of ``stat`` under the model.

    Mean and SD of 1-D models are closed-form; quantile-based statistics
    use bisection on the closed-form CDF. Classification metrics are
    Monte-Carlo estimates on ``draws`` samples, with the standard error
    taken from ``batches`` equal batch means.
    """
    gen = model.generator
    if isinstance(gen, ClassConditionalModel):
        if not isinstance(stat, MetricEvaluator):
            raise TypeError("classification models need a MetricEvaluator")
        table = gen.sample(substream(seed, 0), draws)
        value, _ = evaluate(table, stat)
        m = draws // batches
        per_batch = [evaluate(table.take(slice(i * m, (i + 1) * m)), stat)[0] for i in range(batches)]
        se = float(np.std(per_batch, ddof=1) / math.sqrt(batches))
        return TruthValue(float(value), "monte_carlo", draws, se)
    if not isinstance(stat, StatisticKind):
        raise TypeError("1-D models need a StatisticKind")
    return TruthValue(float(_univariate_truth(gen, stat)), "analytic")


def draw(model, n: int, seed_or_rng) -> Sample | object:
    """``n`` i.i.d. draws from the model's generator.

    Returns a :class:`Sample` (carrying the model's bounds) for 1-D
    generators and a :class:`LogitTable` for the class-conditional model.
    """
    gen = model.generator if isinstance(model, TrueModel) else model
    rng = seed_or_rng if isinstance(seed_or_rng, np.random.Generator) else substream(seed_or_rng)
    if isinstance(gen, ClassConditionalModel):
        return gen.sample(rng, n)
    x = gen.sample(rng, n)
    bounds = model.bounds if isinstance(model, TrueModel) else None
    if bounds is None and isinstance(gen, Kde1D):
        bounds = gen.bounds
    return Sample(x, bounds)
