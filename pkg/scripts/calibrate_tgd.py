"""Contraction factor and final error of TGD across (eta, C_tau).

The contraction is exp of the least-squares slope of log error over
iterations 5..30, the same fit the acceptance suite uses.
"""

import argparse
import math

import numpy as np

from quadsparse.init_quadratic import initialize
from quadsparse.sensing import generate_instance
from quadsparse.tgd import TGDConfig, tgd_run


def contraction(errors, lo=5, hi=30):
    it = np.arange(lo, min(hi, len(errors) - 1) + 1)
    return math.exp(np.polyfit(it, np.log(np.asarray(errors)[it]), 1)[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--m", type=int, default=3000)
    ap.add_argument("--mu0", type=float, default=0.8)
    ap.add_argument("--eta", default="0.01,0.02,0.04")
    ap.add_argument("--C-tau", dest="C_tau", default="0.5,2,8")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--T-max", dest="T_max", type=int, default=60)
    args = ap.parse_args()
    insts = [generate_instance(args.n, args.k, args.m, args.mu0, seed=s, mode="streamed")
             for s in range(args.seeds)]
    inits = [initialize(inst).x_init for inst in insts]
    print("eta,C_tau,median_contraction,1-4eta,median_final_error")
    for eta in map(float, args.eta.split(",")):
        for C_tau in map(float, args.C_tau.split(",")):
            q, fin = [], []
            for inst, x in zip(insts, inits):
                tr = tgd_run(inst, x, TGDConfig(eta=eta, C_tau=C_tau, T_max=args.T_max))
                q.append(contraction(tr.errors))
                fin.append(tr.final_error)
            print(f"{eta:g},{C_tau:g},{np.median(q):.4f},{1 - 4 * eta:.4f},{np.median(fin):.3e}")


if __name__ == "__main__":
    main()
