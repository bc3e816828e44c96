"""One (instance, algorithm) cell of an experiment and its aggregation.

Cells are plain dicts in and out so they can cross process boundaries; the
result never depends on which worker ran it.
"""

import math
import time

import numpy as np

from .errors import InvalidArgument, QuadSparseError
from .init_quadratic import DEFAULT_C_THR, initialize
from .io import load_instance
from .linalg import sign_resolved_error
from .pr_init import DEFAULT_C_THR as DEFAULT_PR_C_THR
from .pr_init import generate_pr_instance, pr_initialize
from .sensing import generate_instance
from .spf import spf_run
from .tgd import TGDConfig, tgd_run

ALGORITHMS = ("init", "spf", "tgd", "pr-init")

CELL_DEFAULTS = dict(
    sigma=0.0, noise="gaussian", mode="auto", C_thr=None, eta=0.04, C_tau=2.0,
    T_max=1000, tol=1e-12, T=50, L=25, spf_tol=1e-10, trace=False, timing=False,
    instance=None,
)


def _snake(name):
    out = []
    for ch in name:
        if ch.isupper() and out:
            out.append("_")
        out.append(ch.lower())
    return "".join(out)


def build_instance(cell):
    if cell.get("instance"):
        return load_instance(cell["instance"])
    gen = generate_pr_instance if cell["algorithm"] == "pr-init" else generate_instance
    return gen(cell["n"], cell["k"], cell["m"], cell["mu0"], sigma=cell["sigma"],
               noise_kind=cell["noise"], mode=cell["mode"], seed=cell["seed"])


def relative_error(x, x0):
    return sign_resolved_error(x, x0) / np.linalg.norm(x0)


def run_cell(cell):
    """Run one algorithm on one instance.

    Library errors are reported through ``stop_reason``; the returned dict has
    the RunRecord fields plus an optional per-iteration ``trace`` list.
    """
    cell = {**CELL_DEFAULTS, **cell}
    algo = cell["algorithm"]
    if algo not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algo!r}")
    inst = build_instance(cell)
    if algo == "pr-init" and inst.kind != "pr":
        raise ValueError("pr-init needs a phase-retrieval instance")
    if algo != "pr-init" and inst.kind == "pr":
        raise ValueError(f"{algo} needs a quadratic instance")
    rec = dict(algorithm=algo, n=inst.n, k=inst.k, m=inst.m, mu0=inst.mu0_target,
               sigma=inst.sigma, noise=inst.noise_kind, mode=inst.mode, seed=inst.seed,
               final_error=math.nan, init_error=math.nan, iterations=0, wall_time=None,
               stop_reason="ok")
    trace = []
    t0 = time.perf_counter()
    try:
        if algo == "pr-init":
            C = DEFAULT_PR_C_THR if cell["C_thr"] is None else cell["C_thr"]
            est = pr_initialize(inst, C)
        else:
            C = DEFAULT_C_THR if cell["C_thr"] is None else cell["C_thr"]
            est = initialize(inst, C)
        rec["init_error"] = rec["final_error"] = float(sign_resolved_error(est.x_init, inst.x0))
        if algo == "spf":
            tr = spf_run(inst, est.x_init, T=cell["T"], L=cell["L"], tol=cell["spf_tol"])
        elif algo == "tgd":
            cfg = TGDConfig(eta=cell["eta"], C_tau=cell["C_tau"], T_max=cell["T_max"],
                            tol=cell["tol"])
            tr = tgd_run(inst, est.x_init, cfg)
        else:
            tr = None
        if tr is not None:
            rec["final_error"] = float(tr.final_error)
            rec["iterations"] = tr.iterations
            rec["stop_reason"] = tr.stop_reason
            trace = list(zip(range(len(tr.errors)), tr.errors, tr.risks))
    except InvalidArgument:
        # a bad parameter is the caller's mistake, not an algorithm outcome
        raise
    except QuadSparseError as exc:
        rec["stop_reason"] = _snake(type(exc).__name__)
        partial = getattr(exc, "trace", None)
        if partial is not None and partial.errors:
            rec["final_error"] = float(partial.errors[-1])
            rec["iterations"] = partial.iterations
            trace = list(zip(range(len(partial.errors)), partial.errors, partial.risks))
    if cell["timing"]:
        rec["wall_time"] = time.perf_counter() - t0
    if cell["trace"]:
        rec["trace"] = trace
    return rec


def aggregate(records, threshold):
    """success_rate and median final error of a list of RunRecords."""
    errs = np.array([r["final_error"] for r in records], dtype=np.float64)
    ok = np.isfinite(errs) & (errs <= threshold)
    med = float(np.median(np.where(np.isfinite(errs), errs, np.inf))) if errs.size else math.nan
    return float(ok.mean()) if errs.size else math.nan, med
