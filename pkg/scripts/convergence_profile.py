"""Print objective, decrement and fixed-point residual along one fit.

    python scripts/convergence_profile.py --n 10 --k 3 --perturbation 0.05 --every 50
"""

import argparse

from divfact import FitConfig, SyntheticSpec, fit, plant_model


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10)
    ap.add_argument("--k", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--perturbation", type=float, default=0.05)
    ap.add_argument("--variant", choices=("alg1", "alg2"), default="alg1")
    ap.add_argument("--init", choices=("pca", "random"), default="pca")
    ap.add_argument("--max-iter", type=int, default=10000)
    ap.add_argument("--every", type=int, default=25, help="print every this many iterations")
    args = ap.parse_args()

    _, S0 = plant_model(SyntheticSpec(args.n, args.k, perturbation=args.perturbation, seed=args.seed))
    res = fit(S0, FitConfig(k=args.k, variant=args.variant, init=args.init, seed=args.seed,
                            max_iter=args.max_iter))
    print(f"{'iter':>6} {'objective':>14} {'decrement':>11} {'residual H':>11} {'residual D':>11} {'min D':>9}")
    last = len(res.trace.records) - 1
    for i, r in enumerate(res.trace.records):
        if i % args.every and i != last:
            continue
        dec = "" if r.decrement is None else f"{r.decrement:.3e}"
        print(f"{r.iteration:>6} {r.objective:>14.10f} {dec:>11} {r.residual_h:>11.3e} "
              f"{r.residual_d:>11.3e} {r.min_d:>9.3e}")
    print(f"termination: {res.termination.value} after {res.iterations} iterations ({res.trace.reason})")


if __name__ == "__main__":
    main()
