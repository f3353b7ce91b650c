"""Confidence intervals for evaluation metrics and Monte-Carlo audits of their coverage."""
from .bootstrap import BcaDiagnostics, BootstrapPlan, bootstrap_ci
from .ccp import CcpFit, fit_ccp, paired_sign_flip_test, unpaired_permutation_test
from .coverage import CoverageRecord, estimate_coverage, exact_proportion_coverage, required_trials
from .intervals import (
    CiSpec,
    Interval,
    ProportionCount,
    empirical_bernstein_ci,
    hoeffding_ci,
    mean_ci_t,
    mean_ci_z,
    prop_ci,
)
from .methods import ALL_METHODS, compute_interval
from .metrics import LogitTable, MetricEvaluator, evaluate
from .stats_core import IQM, IQR, MEAN, MEDIAN, SD, Sample, StatisticKind, moments, quantile, summary

__all__ = [
    "ALL_METHODS", "BcaDiagnostics", "BootstrapPlan", "CcpFit", "CiSpec", "CoverageRecord",
    "IQM", "IQR", "Interval", "LogitTable", "MEAN", "MEDIAN", "MetricEvaluator",
    "ProportionCount", "SD", "Sample", "StatisticKind", "bootstrap_ci", "compute_interval",
    "empirical_bernstein_ci", "estimate_coverage", "evaluate", "exact_proportion_coverage",
    "fit_ccp", "hoeffding_ci", "mean_ci_t", "mean_ci_z", "moments", "paired_sign_flip_test",
    "prop_ci", "quantile", "required_trials", "summary", "unpaired_permutation_test",
]
