"""Width of Hoeffding, empirical Bernstein and t intervals on [0, 1] data.

Prints the width coefficients, the Hoeffding/Bernstein crossover sample
size for a given SD, and a small table of widths over n.
"""
from __future__ import annotations

import argparse
import math

from scipy import optimize

from ci_workbench.intervals import bernstein_half_width, hoeffding_half_width, t_quantile


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--sd", type=float, default=0.22, help="sample SD of the [0, 1] data")
    args = ap.parse_args()

    a, sd = args.alpha, args.sd
    c_h = 2 * math.sqrt(math.log(2 / a) / 2)
    c_b1 = 2 * math.sqrt(2 * math.log(4 / a))
    c_b2 = 14 * math.log(4 / a) / 3
    c_t = 2 * t_quantile(10**9, 1 - a / 2)
    print(f"hoeffding  {c_h:.4f} / sqrt(n)")
    print(f"bernstein  {c_b1:.4f} sd / sqrt(n) + {c_b2:.4f} / (n - 1)")
    print(f"t          {c_t:.4f} sd / sqrt(n)  (large n)")
    print(f"EB/t ratio {c_b1 / c_t:.4f}, hoeffding/t at sd={sd}: {c_h / (sd * c_t):.3f}")

    gap = lambda n: bernstein_half_width(sd, n, a) - hoeffding_half_width(n, a)  # noqa: E731
    print(f"crossover at n = {optimize.brentq(gap, 3, 1e7):.2f}")
    print(f"{'n':>6} {'hoeffding':>10} {'bernstein':>10} {'t':>10}")
    for n in (10, 25, 50, 100, 211, 500, 1000, 10_000):
        t = 2 * t_quantile(n - 1, 1 - a / 2) * sd / math.sqrt(n)
        print(f"{n:>6} {2 * hoeffding_half_width(n, a):>10.4f} {2 * bernstein_half_width(sd, n, a):>10.4f} {t:>10.4f}")


if __name__ == "__main__":
    main()
