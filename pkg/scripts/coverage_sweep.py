"""Coverage sweep on synthetic truths followed by a pace fit per method.

Builds a symmetric and a right-skewed KDE truth of equal variance, runs the
listed interval methods for the mean over an n grid and prints the fitted
coverage convergence pace of each (truth, method) pair.
"""
from __future__ import annotations

import argparse
import math

import numpy as np

from ci_workbench.ccp import fit_ccp
from ci_workbench.coverage import estimate_coverage
from ci_workbench.distfit import TrueModel, fit_kde
from ci_workbench.intervals import CiSpec
from ci_workbench.stats_core import MEAN


def truths(seed: int) -> dict:
    rng = np.random.default_rng(seed)
    out = {}
    for name, x in (("symmetric", rng.normal(0, 1, 1500)), ("skewed", rng.lognormal(0, 1, 1500))):
        gen = fit_kde(x)
        gen = gen.affine(1.0 / math.sqrt(gen.variance()))
        model = TrueModel(gen)
        model.add_truth(MEAN)
        out[name] = model
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--methods", nargs="+", default=["t", "z", "percentile", "basic", "bca"])
    ap.add_argument("--n", type=int, nargs="+", default=[10, 20, 40, 80, 160])
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--resamples", type=int, default=999)
    ap.add_argument("--seed", type=int, default=111)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    print("truth,method,pace,relative_error," + ",".join(f"n{n}" for n in args.n))
    for name, model in truths(args.seed).items():
        for method in args.methods:
            cov = [estimate_coverage(model, MEAN, method, n, args.trials, CiSpec(), args.seed,
                                     resamples=args.resamples, jobs=args.jobs).coverage for n in args.n]
            fit = fit_ccp(zip(args.n, cov))
            print(f"{name},{method},{fit.pace:.3f},{fit.relative_error:.3f}," + ",".join(f"{c:.4f}" for c in cov),
                  flush=True)


if __name__ == "__main__":
    main()
