"""Mean-field phase structure and criticality-enhanced sensing in one sweep.

Walks the drive through the critical value lambda_c = gamma_a gamma_b / (2 g).
Below threshold there is a single stable normal branch; the fluctuation
occupation and the photon-counting uncertainty of g are printed, the latter
falling toward zero at the transition. Above threshold the script lists the
bright-branch amplitude and the (now positive) leading stability rate of the
destabilized normal branch.
"""

import argparse
import sys

import numpy as np

from pdclab import meanfield
from pdclab.analytic import critical_lambda
from pdclab.dynamics import SystemParams


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--g", type=float, default=0.4)
    ap.add_argument("--gamma-a", type=float, default=2.0)
    ap.add_argument("--gamma-b", type=float, default=1.5)
    ap.add_argument("--nbar", type=float, default=0.0)
    ap.add_argument("--fracs", type=float, nargs="+",
                    default=[0.3, 0.6, 0.9, 0.99, 0.999, 1.01, 1.2, 1.6])
    args = ap.parse_args(argv)

    base = SystemParams(g=args.g, lambda_a=1.0, gamma_a=args.gamma_a,
                        gamma_b=args.gamma_b)
    lam_c = critical_lambda(base)
    print(f"critical drive lambda_c = {lam_c:.6f}")
    print(f"{'lambda/lambda_c':>16} {'branches':>9} {'max Re W':>12} "
          f"{'n_fluct':>12} {'delta^2 g':>12} {'|b| bright':>11}")
    print("-" * 78)

    for frac in args.fracs:
        p = SystemParams(g=args.g, lambda_a=frac * lam_c, gamma_a=args.gamma_a,
                         gamma_b=args.gamma_b)
        sols = meanfield.steady_solutions(p)
        normal = next(s for s in sols if s.branch == "normal")
        rep = meanfield.build_W(p, normal)
        rate = max(np.linalg.eigvals(rep.W).real)
        if frac < 1.0:
            mom = meanfield.fluct_moments_analytic(p, args.nbar)
            d2 = meanfield.delta2_g_normal(p, nbar=args.nbar, method="moments").delta2
            print(f"{frac:16.4f} {len(sols):9d} {rate:12.4e} "
                  f"{mom.n_fluct:12.4e} {d2:12.4e} {'-':>11}")
        else:
            bright = next(s for s in sols if s.branch == "superradiant_plus")
            print(f"{frac:16.4f} {len(sols):9d} {rate:12.4e} "
                  f"{'(diverges)':>12} {'-':>12} {abs(bright.amp_b):11.5f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
