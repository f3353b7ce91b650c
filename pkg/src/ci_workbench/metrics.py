"""Classification metrics computed from logits.

Predictions are ``argmax`` of the logits (lowest index wins ties) and
scores are softmax probabilities. Micro aggregation pools the ``n*d``
one-hot (label, prediction-or-score) pairs; macro aggregation averages the
per-class one-vs-rest values over classes present in the labels.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import MetricUndefined

METRICS = ("accuracy", "balanced_accuracy", "f1", "auc", "average_precision", "mcc")
INTRINSIC = ("accuracy", "balanced_accuracy", "mcc")

# flags
CLASS_ABSENT = "class_absent"
ZERO_DENOMINATOR = "zero_denominator"


@dataclass(frozen=True)
class LogitTable:
    logits: np.ndarray
    labels: np.ndarray
    num_classes: int | None = None

    def __post_init__(self):
        logits = np.array(self.logits, dtype=float)
        labels = np.array(self.labels).astype(np.int64).reshape(-1)
        if logits.ndim != 2:
            raise ValueError("logits must be an n x d matrix")
        n, d = logits.shape
        num_classes = d if self.num_classes is None else int(self.num_classes)
        if num_classes != d:
            raise ValueError(f"num_classes {num_classes} does not match {d} logit columns")
        if d < 2:
            raise ValueError("need at least two classes")
        if n == 0:
            raise ValueError("logit table has no rows")
        if labels.size != n:
            raise ValueError(f"{labels.size} labels for {n} logit rows")
        if labels.min() < 0 or labels.max() >= d:
            raise ValueError(f"labels must lie in [0, {d})")
        if not np.all(np.isfinite(logits)):
            raise ValueError("logits must be finite")
        logits.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_classes", d)

    def __len__(self) -> int:
        return self.labels.size

    @property
    def n(self) -> int:
        return self.labels.size

    def take(self, idx) -> "LogitTable":
        return LogitTable(self.logits[idx], self.labels[idx], self.num_classes)


@dataclass(frozen=True)
class MetricEvaluator:
    metric: str
    aggregation: str = "intrinsic"

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.metric in INTRINSIC:
            if self.aggregation != "intrinsic":
                raise ValueError(f"{self.metric} is intrinsically aggregated")
        elif self.aggregation not in ("micro", "macro"):
            raise ValueError(f"{self.metric} needs micro or macro aggregation")

    @classmethod
    def parse(cls, text: str) -> "MetricEvaluator":
        metric, _, agg = text.strip().lower().partition(":")
        return cls(metric, agg or "intrinsic")

    @property
    def name(self) -> str:
        if self.aggregation == "intrinsic":
            return self.metric
        return f"{self.metric}:{self.aggregation}"

    def __str__(self) -> str:
        return self.name


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def predict(table: LogitTable) -> tuple[np.ndarray, np.ndarray]:
    """Argmax labels and softmax scores."""
    return np.argmax(table.logits, axis=1), softmax(table.logits)


def confusion_matrix(labels: np.ndarray, preds: np.ndarray, d: int) -> np.ndarray:
    return np.bincount(labels * d + preds, minlength=d * d).reshape(d, d)


def micro_expand(labels: np.ndarray, values: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    """One-hot expansion into ``n*d`` binary (label, value) pairs.

    ``values`` is either a length-n vector of predicted classes (expanded to
    one-hot) or an n x d score matrix (flattened).
    """
    y = np.zeros((labels.size, d), dtype=np.int8)
    y[np.arange(labels.size), labels] = 1
    values = np.asarray(values)
    if values.ndim == 1:
        v = np.zeros((labels.size, d), dtype=np.int8)
        v[np.arange(labels.size), values] = 1
    else:
        v = values
    return y.reshape(-1), v.reshape(-1)


def binary_auc(y: np.ndarray, s: np.ndarray) -> float:
    """Mann-Whitney AUC; tied positive/negative pairs get half credit."""
    y = np.asarray(y).astype(bool)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefined("AUC needs both positives and negatives")
    ranks = rankdata(s)
    return float((ranks[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def binary_average_precision(y: np.ndarray, s: np.ndarray) -> float:
    """Step-wise AP, sum_k (R_k - R_{k-1}) P_k, tied scores forming one step."""
    y = np.asarray(y).astype(bool)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise MetricUndefined("AP needs at least one positive")
    order = np.argsort(-np.asarray(s, dtype=float), kind="stable")
    s_sorted = np.asarray(s, dtype=float)[order]
    tp = np.cumsum(y[order])
    # last position of each run of tied scores
    ends = np.r_[np.nonzero(np.diff(s_sorted))[0], s_sorted.size - 1]
    tp = tp[ends].astype(float)
    precision = tp / (ends + 1)
    recall = tp / n_pos
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def recall(labels: np.ndarray, preds: np.ndarray, d: int, average: str) -> float:
    """Micro or macro recall; macro skips classes absent from ``labels``."""
    if average == "micro":
        y, v = micro_expand(labels, preds, d)
        return float(np.sum((y == 1) & (v == 1)) / np.sum(y == 1))
    cm = confusion_matrix(labels, preds, d)
    support = cm.sum(axis=1)
    present = support > 0
    return float(np.mean(np.diag(cm)[present] / support[present]))


def _f1_from_counts(tp, fp, fn):
    denom = 2 * tp + fp + fn
    with np.errstate(invalid="ignore", divide="ignore"):
        f1 = np.where(denom > 0, 2 * tp / np.where(denom > 0, denom, 1), 0.0)
    return f1, denom == 0


def _mcc(cm: np.ndarray) -> tuple[float, bool]:
    t = cm.sum(axis=1).astype(float)
    p = cm.sum(axis=0).astype(float)
    c = float(np.trace(cm))
    s = float(cm.sum())
    cov_ytyp = c * s - float(t @ p)
    cov_ypyp = s * s - float(p @ p)
    cov_ytyt = s * s - float(t @ t)
    if cov_ypyp == 0.0 or cov_ytyt == 0.0:
        return 0.0, True
    return cov_ytyp / np.sqrt(cov_ytyt * cov_ypyp), False


def _macro(values: list[tuple[int, float]], flags: set, what: str) -> float:
    if not values:
        raise MetricUndefined(f"no class admits a defined {what}")
    return float(np.mean([v for _, v in values]))


def evaluate_arrays(
    labels: np.ndarray,
    preds: np.ndarray,
    scores: np.ndarray,
    d: int,
    evaluator: MetricEvaluator,
) -> tuple[float, frozenset]:
    """Metric value from precomputed predictions and scores, plus flags."""
    flags: set = set()
    metric, agg = evaluator.metric, evaluator.aggregation
    if metric == "accuracy":
        return float(np.mean(labels == preds)), frozenset()
    if metric == "balanced_accuracy":
        cm = confusion_matrix(labels, preds, d)
        support = cm.sum(axis=1)
        if np.any(support == 0):
            flags.add(CLASS_ABSENT)
        present = support > 0
        return float(np.mean(np.diag(cm)[present] / support[present])), frozenset(flags)
    if metric == "mcc":
        value, zero = _mcc(confusion_matrix(labels, preds, d))
        if zero:
            flags.add(ZERO_DENOMINATOR)
        return float(value), frozenset(flags)
    if metric == "f1":
        cm = confusion_matrix(labels, preds, d)
        tp = np.diag(cm).astype(float)
        fp = cm.sum(axis=0) - tp
        fn = cm.sum(axis=1) - tp
        if agg == "micro":
            f1, _ = _f1_from_counts(tp.sum(), fp.sum(), fn.sum())
            return float(f1), frozenset()
        support = cm.sum(axis=1)
        f1, _ = _f1_from_counts(tp, fp, fn)
        present = support > 0
        if np.any(~present):
            flags.add(CLASS_ABSENT)
        # present class never predicted and never hit: precision 0/0
        if np.any(present & (tp == 0)):
            flags.add(ZERO_DENOMINATOR)
        if not np.any(present):
            raise MetricUndefined("no class present")
        return float(np.mean(f1[present])), frozenset(flags)
    binary = binary_auc if metric == "auc" else binary_average_precision
    if agg == "micro":
        if d == 2:
            # binary problem: averaging is moot, score the positive class
            return binary(labels == 1, scores[:, 1]), frozenset()
        y, s = micro_expand(labels, scores, d)
        return binary(y, s), frozenset()
    per_class = []
    for k in range(d):
        y = labels == k
        try:
            per_class.append((k, binary(y, scores[:, k])))
        except MetricUndefined:
            flags.add(CLASS_ABSENT)
    return _macro(per_class, flags, metric), frozenset(flags)


def evaluate(table: LogitTable, evaluator: MetricEvaluator | str) -> tuple[float, frozenset]:
    if isinstance(evaluator, str):
        evaluator = MetricEvaluator.parse(evaluator)
    preds, scores = predict(table)
    return evaluate_arrays(table.labels, preds, scores, table.num_classes, evaluator)
