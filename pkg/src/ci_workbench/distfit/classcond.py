"""Class-conditional generative model for (label, logits) pairs.

Labels are drawn from the empirical class frequencies; logits are drawn
from a per-class adaptive multivariate KDE. Classes with fewer than
``d + 2`` rows (too few for an invertible covariance) are represented by
a point-mass mixture over their observed rows.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateClassCovariance, SingularCovariance
from ..metrics import LogitTable
from .kde import fit_kde_multi


@dataclass(frozen=True)
class PointMassMixture:
    rows: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.array(self.rows, dtype=float))
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.rows[rng.integers(self.rows.shape[0], size=size)]


@dataclass(frozen=True)
class ClassConditionalModel:
    class_probs: np.ndarray
    components: tuple
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        p = np.array(self.class_probs, dtype=float).reshape(-1)
        if abs(p.sum() - 1.0) > 1e-12 or np.any(p < 0):
            raise ValueError("class_probs must be a probability vector")
        if len(self.components) != p.size:
            raise ValueError("one component slot per class required")
        for k, comp in enumerate(self.components):
            if (comp is None) != (p[k] == 0):
                raise ValueError(f"class {k}: component presence must match a non-zero probability")
        p.setflags(write=False)
        object.__setattr__(self, "class_probs", p)
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def num_classes(self) -> int:
        return self.class_probs.size

    @property
    def singleton_classes(self) -> list[int]:
        return [k for k, c in enumerate(self.components) if isinstance(c, PointMassMixture)]

    def sample(self, rng: np.random.Generator, size: int) -> LogitTable:
        d = self.num_classes
        labels = rng.choice(d, size=size, p=self.class_probs)
        logits = np.empty((size, d))
        for k in range(d):
            mask = labels == k
            m = int(mask.sum())
            if m:
                logits[mask] = self.components[k].sample(rng, m)
        return LogitTable(logits, labels, d)


def fit_class_conditional(table: LogitTable, diagonal_fallback: bool = True) -> ClassConditionalModel:
    d = table.num_classes
    counts = np.bincount(table.labels, minlength=d)
    probs = counts / counts.sum()
    components = []
    flags: dict = {}
    for k in range(d):
        rows = table.logits[table.labels == k]
        if rows.shape[0] == 0:
            components.append(None)
            continue
        if rows.shape[0] < d + 2:
            components.append(PointMassMixture(rows))
            flags[str(k)] = "point_mass"
            continue
        try:
            kde, diagonal = fit_kde_multi(rows, allow_diagonal=diagonal_fallback)
        except SingularCovariance as exc:
            if not diagonal_fallback:
                raise DegenerateClassCovariance(f"class {k}: {exc}") from exc
            components.append(PointMassMixture(rows))
            flags[str(k)] = "point_mass"
            continue
        if diagonal:
            flags[str(k)] = "diagonal_covariance"
        components.append(kde)
    return ClassConditionalModel(probs, tuple(components), flags)
