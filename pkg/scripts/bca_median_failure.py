"""Coverage of BCa and percentile intervals for the median when the truth
has a point mass.

The truth is a bounded KDE whose mass at 0.5 is ``--weight``; the rest is a
smooth component around it. With a large atom the jackknife medians all
coincide, the acceleration is undefined and every BCa trial fails.
"""
from __future__ import annotations

import argparse

import numpy as np

from ci_workbench.coverage import estimate_coverage
from ci_workbench.distfit import Kde1D, TrueModel
from ci_workbench.intervals import CiSpec
from ci_workbench.stats_core import MEDIAN


def mixture(weight: float, m: int = 1000, seed: int = 7) -> Kde1D:
    rng = np.random.default_rng(seed)
    atoms = int(round(weight * m))
    offsets = rng.uniform(0.02, 0.3, m - atoms) * rng.choice([-1.0, 1.0], m - atoms)
    centers = np.concatenate([np.full(atoms, 0.5), 0.5 + offsets])
    h = np.concatenate([np.zeros(atoms), np.full(m - atoms, 0.02)])
    return Kde1D(centers, 0.02, np.ones(m), np.ones(m), h, (0.0, 1.0))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.05, 0.1, 0.3])
    ap.add_argument("--n", type=int, nargs="+", default=[25, 100, 250])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--resamples", type=int, default=999)
    ap.add_argument("--policy", default="count_as_miss")
    ap.add_argument("--seed", type=int, default=77)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    print("weight,n,method,coverage,degenerate,mean_width")
    for w in args.weights:
        model = TrueModel(mixture(w), bounds=(0.0, 1.0))
        model.add_truth(MEDIAN)
        for n in args.n:
            for method in ("percentile", "bca"):
                r = estimate_coverage(model, MEDIAN, method, n, args.trials, CiSpec(), args.seed,
                                      resamples=args.resamples, policy=args.policy, jobs=args.jobs)
                print(f"{w},{n},{method},{r.coverage:.4f},{r.degenerate_count},{r.mean_width:.5f}", flush=True)


if __name__ == "__main__":
    main()
