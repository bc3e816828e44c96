"""Scan the phase-retrieval support constant C_thr.

For each (m, C_thr) prints the fraction of seeds whose initial point lands
within 0.3 of x0 and the median error.  The library default came from this.
"""

import argparse

import numpy as np

from quadsparse.linalg import sign_resolved_error
from quadsparse.pr_init import generate_pr_instance, pr_initialize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--mu0", type=float, default=0.8)
    ap.add_argument("--m", default="1000,2000,4000")
    ap.add_argument("--C", default="0.05,0.08,0.1,0.12,0.15,0.2,0.3")
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    print("m,C_thr,frac_le_0.3,median_error,median_support")
    for m in map(int, args.m.split(",")):
        insts = [generate_pr_instance(args.n, args.k, m, args.mu0, seed=s, mode="streamed")
                 for s in range(args.seeds)]
        for C in map(float, args.C.split(",")):
            errs, sizes = [], []
            for inst in insts:
                est = pr_initialize(inst, C)
                errs.append(sign_resolved_error(est.x_init, inst.x0))
                sizes.append(est.support.size)
            errs = np.array(errs)
            print(f"{m},{C:g},{np.mean(errs <= 0.3):.2f},{np.median(errs):.4f},"
                  f"{np.median(sizes):g}")


if __name__ == "__main__":
    main()
