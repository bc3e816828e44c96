"""Scan the quadratic-sensing support constant C_thr.

Prints, per (m, C_thr), how often the selected support is a subset of the
true one, how often it misses a support coordinate, and the median init
error.
"""

import argparse

import numpy as np

from quadsparse.errors import DegenerateSupport
from quadsparse.init_quadratic import initialize
from quadsparse.linalg import sign_resolved_error
from quadsparse.sensing import generate_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--mu0", type=float, default=0.8)
    ap.add_argument("--m", default="1000,2000,4000")
    ap.add_argument("--C", default="1,2,3,4,6")
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()
    print("m,C_thr,subset_rate,full_rate,median_error")
    for m in map(int, args.m.split(",")):
        insts = [generate_instance(args.n, args.k, m, args.mu0, seed=s, mode="streamed")
                 for s in range(args.seeds)]
        for C in map(float, args.C.split(",")):
            sub = full = 0
            errs = []
            for inst in insts:
                true = set(np.flatnonzero(inst.x0))
                try:
                    est = initialize(inst, C)
                except DegenerateSupport:
                    errs.append(np.inf)
                    continue
                S = set(est.support.tolist())
                sub += S <= true
                full += S == true
                errs.append(sign_resolved_error(est.x_init, inst.x0))
            n = len(insts)
            print(f"{m},{C:g},{sub / n:.2f},{full / n:.2f},{np.median(errs):.4f}")


if __name__ == "__main__":
    main()
