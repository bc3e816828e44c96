"""Empirical restricted isometry constants of the quadratic ensemble.

Prints the largest |(1/m) sum <A_i, X>^2 - 1| seen over random sparse,
low-rank, unit-norm X, for a range of m.
"""

import argparse

from quadsparse.sensing import SensingEnsemble, rip_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--sparsity", type=int, default=10)
    ap.add_argument("--rank", type=int, default=2)
    ap.add_argument("--m", default="250,500,1000,2000,4000")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print("m,delta_lower_bound")
    for m in map(int, args.m.split(",")):
        ens = SensingEnsemble(args.n, m, args.seed, "streamed")
        print(f"{m},{rip_estimate(ens, args.sparsity, args.rank, args.trials, args.seed):.4f}")


if __name__ == "__main__":
    main()
