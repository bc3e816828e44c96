"""Command-line front end.

Subcommands: gen, run {init,spf,tgd,pr-init}, sweep, ogp, validate.  All
tabular output is CSV with a ``schema`` first column; exit codes are listed
in EXIT_CODES and in the README.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
import math
import os
import sys

import numpy as np

from . import __version__
from . import rng as _rng
from .errors import BudgetExceeded, FormatError, InvalidArgument, QuadSparseError
from .experiments import ALGORITHMS, aggregate, run_cell

EXIT_OK = 0
EXIT_FAILED = 1  # validate: at least one check failed
EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_IO = 4
EXIT_BUDGET = 5
EXIT_INTERNAL = 70

EXIT_CODES = {
    EXIT_OK: "success",
    EXIT_FAILED: "validation suite reported a failed check",
    EXIT_USAGE: "usage error: unknown or missing flag, bad config file",
    EXIT_INVALID: "parameter outside its domain (e.g. mu0 < 1/sqrt(k))",
    EXIT_IO: "file could not be read or written, or is not a valid instance file",
    EXIT_BUDGET: "enumeration budget exceeded",
    EXIT_INTERNAL: "unexpected internal error",
}

WORKERS_ENV = "QSR_WORKERS"

SCHEMA_RUN = "run/1"
SCHEMA_TRACE = "trace/1"
SCHEMA_SWEEP = "sweep/1"
SCHEMA_CURVE = "ogp-curve/1"
SCHEMA_PROFILE = "ogp-profile/1"
SCHEMA_OGP = "ogp-summary/1"
SCHEMA_VALIDATE = "validate/1"

RUN_COLUMNS = ["schema", "algorithm", "n", "k", "m", "mu0", "sigma", "noise", "mode", "seed",
               "init_error", "final_error", "iterations", "wall_time", "stop_reason"]
SWEEP_COLUMNS = ["schema", "n", "k", "m", "mu0", "sigma", "algorithm", "success_rate",
                 "median_error", "seeds"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# --- flag defaults (lowest precedence) ---------------------------------------

DEFAULTS = {
    "gen": dict(kind="quadratic", kprime=None, sigma=0.0, noise="gaussian", mode="auto"),
    "run": dict(sigma=0.0, noise="gaussian", mode="auto", seeds=1, C_thr=None, eta=0.04,
                C_tau=2.0, T_max=1000, tol=1e-12, T=50, L=25, spf_tol=1e-10),
    "sweep": dict(sigma="0", noise="gaussian", mode="auto", seeds=10, success_threshold=1e-3,
                  C_thr=None, eta=0.04, C_tau=2.0, T_max=1000, tol=1e-12, T=50, L=25,
                  spf_tol=1e-10),
    "ogp": dict(kprime=None, sigma=0.0, noise="gaussian", trials=1, alpha=None, budget=10**7,
                mode="auto", out_dir="."),
    "validate": dict(suite="all", t=2.0, D=1, trials=100_000),
}

REQUIRED = {
    "gen": ("out",),
    "run": (),
    "sweep": ("n", "k", "m", "mu0", "algorithm"),
    "ogp": ("n", "k", "m"),
    "validate": (),
}


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if v != v else ("inf" if v > 0 else "-inf"))
    return str(v)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _csv_list(conv):
    def parse(text):
        try:
            vals = [conv(t) for t in str(text).split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc))
        if not vals:
            raise argparse.ArgumentTypeError("empty list")
        return vals
    return parse


def _common(p):
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--seed", type=int, help="base seed; drawn from entropy and printed if omitted")


def _instance_flags(p, lists=False):
    conv_i = _csv_list(int) if lists else int
    conv_f = _csv_list(float) if lists else float
    p.add_argument("--n", type=conv_i)
    p.add_argument("--k", type=conv_i)
    p.add_argument("--m", type=conv_i)
    p.add_argument("--mu0", type=conv_f)
    p.add_argument("--sigma", type=conv_f if lists else float)
    p.add_argument("--noise", choices=("gaussian", "laplace", "none"))
    p.add_argument("--mode", choices=("auto", "materialized", "streamed"))


def _algo_flags(p):
    p.add_argument("--C-thr", dest="C_thr", type=float, help="support threshold constant")
    p.add_argument("--eta", type=float, help="TGD step size")
    p.add_argument("--C-tau", dest="C_tau", type=float, help="TGD truncation constant")
    p.add_argument("--T-max", dest="T_max", type=int, help="TGD iteration cap")
    p.add_argument("--tol", type=float, help="TGD step-size stopping tolerance")
    p.add_argument("--T", type=int, help="SPF outer iterations")
    p.add_argument("--L", type=int, help="IHT iterations per SPF step")
    p.add_argument("--spf-tol", dest="spf_tol", type=float, help="SPF angle tolerance")
    p.add_argument("--workers", type=int, help=f"process count (default ${WORKERS_ENV} or 1)")
    p.add_argument("--plot-dir", dest="plot_dir", help="also render PNG figures here")


def build_parser():
    top = _Parser(prog="quadsparse", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=__version__)
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    g = sub.add_parser("gen", help="generate an instance file")
    _common(g)
    _instance_flags(g)
    g.add_argument("--kind", choices=("quadratic", "pr", "binary"))
    g.add_argument("--kprime", type=int, help="k' for binary instances")
    g.add_argument("--out", help="output path")

    r = sub.add_parser("run", help="run one algorithm, one CSV row per seed")
    r.add_argument("algorithm", choices=ALGORITHMS)
    _common(r)
    _instance_flags(r)
    r.add_argument("--instance", help="instance file instead of inline generation")
    r.add_argument("--seeds", type=int, help="number of consecutive seeds from --seed")
    r.add_argument("--trace", help="write the per-iteration error trace here")
    r.add_argument("--timing", action="store_true", default=None,
                   help="fill the wall_time column (makes output non-reproducible)")
    r.add_argument("--out", help="CSV path (default stdout)")
    _algo_flags(r)

    s = sub.add_parser("sweep", help="success rate over a parameter grid")
    _common(s)
    _instance_flags(s, lists=True)
    s.add_argument("--algorithm", choices=ALGORITHMS)
    s.add_argument("--seeds", type=int, help="seeds per grid point")
    s.add_argument("--success-threshold", dest="success_threshold", type=float)
    s.add_argument("--rows", help="also write every RunRecord here")
    s.add_argument("--out", help="CSV path (default stdout)")
    _algo_flags(s)

    o = sub.add_parser("ogp", help="first-moment curve and brute-force overlap profile")
    _common(o)
    o.add_argument("--n", type=int)
    o.add_argument("--k", type=int)
    o.add_argument("--kprime", type=int)
    o.add_argument("--m", type=int)
    o.add_argument("--sigma", type=float)
    o.add_argument("--noise", choices=("gaussian", "laplace", "none"))
    o.add_argument("--mode", choices=("auto", "materialized", "streamed"))
    o.add_argument("--alpha", type=float, help="default log k")
    o.add_argument("--trials", type=int)
    o.add_argument("--budget", type=int, help="max candidates enumerated per trial")
    o.add_argument("--out-dir", dest="out_dir", help="directory for the curve/profile CSVs")
    o.add_argument("--workers", type=int)
    o.add_argument("--plot-dir", dest="plot_dir")

    v = sub.add_parser("validate", help="run invariant suites, exit 1 on any failure")
    _common(v)
    v.add_argument("--suite", choices=("chi2", "oracle", "gradient", "eigen", "combinatorics",
                                       "all"))
    v.add_argument("--t", type=float, help="chi2 tail parameter")
    v.add_argument("--D", type=int, help="chi2 degrees of freedom")
    v.add_argument("--trials", type=int)
    v.add_argument("--out", help="CSV path (default stdout)")
    return top


# --- config handling ----------------------------------------------------------

def read_config(path):
    """Parse a flat key=value file; '#' starts a comment."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}")
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        return action.choices[command]


def resolve(parser, argv):
    """Parse argv and merge flags > config > defaults."""
    ns = parser.parse_args(argv)
    cmd = ns.command
    sp = _subparser(parser, cmd)
    actions = {a.dest: a for a in sp._actions if a.dest not in ("help", "config")}
    merged = dict(DEFAULTS.get(cmd, {}))
    if getattr(ns, "config", None):
        for key, raw in read_config(ns.config).items():
            act = actions.get(key)
            if act is None or not act.option_strings:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            try:
                if act.type is not None:
                    val = act.type(raw)
                elif isinstance(act, argparse._StoreTrueAction):
                    val = raw.lower() in ("1", "true", "yes")
                else:
                    val = raw
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key}: {exc}")
            if act.choices is not None and val not in act.choices:
                raise UsageError(f"config key {key}: {val!r} not one of {sorted(act.choices)}")
            merged[key] = val
    for dest in actions:
        val = getattr(ns, dest, None)
        if val is not None:
            merged[dest] = val
    merged["command"] = cmd
    for dest in actions:
        merged.setdefault(dest, None)
    missing = [f"--{d.replace('_', '-')}" for d in REQUIRED[cmd] if merged.get(d) is None]
    if missing:
        sp.print_usage(sys.stderr)
        raise UsageError(f"{sp.prog}: missing required: {', '.join(missing)}")
    if cmd == "sweep" and isinstance(merged["sigma"], str):
        merged["sigma"] = _csv_list(float)(merged["sigma"])
    return merged


def _seed(opts):
    if opts.get("seed") is None:
        opts["seed"] = _rng.fresh_seed() % 2**63
        print(f"seed: {opts['seed']}", file=sys.stderr)
    return opts["seed"]


def _workers(opts):
    w = opts.get("workers")
    if w is None:
        env = os.environ.get(WORKERS_ENV)
        try:
            w = int(env) if env else 1
        except ValueError:
            raise UsageError(f"${WORKERS_ENV} must be an integer")
    if w < 1:
        raise UsageError("worker count must be >= 1")
    return w


def _map(fn, items, workers):
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- commands -------------------------------------------------------------------

def cmd_gen(opts):
    from .io import save_instance
    from .pr_init import generate_pr_instance
    from .sensing import generate_binary_instance, generate_instance

    seed = _seed(opts)
    kind = opts["kind"]
    need = ("n", "k", "m") + (("mu0",) if kind != "binary" else ("kprime",))
    missing = [f"--{d}" for d in need if opts.get(d) is None]
    if missing:
        raise UsageError(f"gen --kind {kind}: missing required: {', '.join(missing)}")
    common = dict(sigma=opts["sigma"], noise_kind=opts["noise"], mode=opts["mode"], seed=seed)
    if kind == "quadratic":
        inst = generate_instance(opts["n"], opts["k"], opts["m"], opts["mu0"], **common)
    elif kind == "pr":
        inst = generate_pr_instance(opts["n"], opts["k"], opts["m"], opts["mu0"], **common)
    else:
        inst = generate_binary_instance(opts["n"], opts["k"], opts["kprime"], opts["m"], **common)
    size = save_instance(inst, opts["out"])
    w = _writer(sys.stdout)
    w.writerow(["schema", "path", "kind", "mode", "n", "k", "m", "seed", "bytes"])
    w.writerow(["gen/1", opts["out"], inst.kind, inst.mode, inst.n, inst.k, inst.m, inst.seed,
                size])
    return EXIT_OK


def _cell_opts(opts):
    keys = ("sigma", "noise", "mode", "C_thr", "eta", "C_tau", "T_max", "tol", "T", "L",
            "spf_tol")
    return {k: opts[k] for k in keys if opts.get(k) is not None}


def _write_rows(fh, records):
    w = _writer(fh)
    w.writerow(RUN_COLUMNS)
    for r in records:
        w.writerow([SCHEMA_RUN] + [_fmt(r[c]) for c in RUN_COLUMNS[1:]])


def cmd_run(opts):
    algo = opts["algorithm"]
    base = _cell_opts(opts)
    base.update(algorithm=algo, trace=bool(opts.get("trace") or opts.get("plot_dir")),
                timing=bool(opts.get("timing")))
    if opts.get("instance"):
        if not os.path.exists(opts["instance"]):
            raise FileNotFoundError(opts["instance"])
        cells = [dict(base, instance=opts["instance"])]
    else:
        missing = [f"--{d}" for d in ("n", "k", "m", "mu0") if opts.get(d) is None]
        if missing:
            raise UsageError(f"run: give --instance or all of {', '.join(missing)}")
        seed = _seed(opts)
        if opts["seeds"] < 1:
            raise InvalidArgument("--seeds must be >= 1")
        cells = [dict(base, n=opts["n"], k=opts["k"], m=opts["m"], mu0=opts["mu0"], seed=seed + j)
                 for j in range(opts["seeds"])]
    records = _map(run_cell, cells, _workers(opts))
    records.sort(key=lambda r: r["seed"])
    fh, close = _open_out(opts.get("out"))
    try:
        _write_rows(fh, records)
    finally:
        if close:
            fh.close()
    if opts.get("trace"):
        with open(opts["trace"], "w", newline="") as th:
            w = _writer(th)
            w.writerow(["schema", "seed", "iter", "error", "risk"])
            for r in records:
                for it, err, risk in r.get("trace", []):
                    w.writerow([SCHEMA_TRACE, r["seed"], it, _fmt(float(err)), _fmt(float(risk))])
    if opts.get("plot_dir"):
        from .plots import plot_traces
        plot_traces(records, opts["plot_dir"])
    return EXIT_OK


def sweep_cells(opts, seed):
    base = _cell_opts({**opts, "sigma": None})
    base["algorithm"] = opts["algorithm"]
    cells = []
    for n in opts["n"]:
        for k in opts["k"]:
            for m in opts["m"]:
                for mu0 in opts["mu0"]:
                    for sigma in opts["sigma"]:
                        for j in range(opts["seeds"]):
                            cells.append(dict(base, n=n, k=k, m=m, mu0=mu0, sigma=sigma,
                                              seed=seed + j))
    return cells


def _grid_key(r):
    return (r["n"], r["k"], r["m"], r["mu0"], r["sigma"])


def cmd_sweep(opts):
    seed = _seed(opts)
    if opts["seeds"] < 1:
        raise InvalidArgument("--seeds must be >= 1")
    cells = sweep_cells(opts, seed)
    records = _map(run_cell, cells, _workers(opts))
    records.sort(key=lambda r: (_grid_key(r), r["seed"]))
    groups = {}
    for r in records:
        groups.setdefault(_grid_key(r), []).append(r)
    rows = []
    for key in sorted(groups):
        rate, med = aggregate(groups[key], opts["success_threshold"])
        rows.append(dict(zip(("n", "k", "m", "mu0", "sigma"), key), algorithm=opts["algorithm"],
                         success_rate=rate, median_error=med, seeds=len(groups[key])))
    fh, close = _open_out(opts.get("out"))
    try:
        w = _writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([SCHEMA_SWEEP] + [_fmt(row[c]) for c in SWEEP_COLUMNS[1:]])
    finally:
        if close:
            fh.close()
    if opts.get("rows"):
        with open(opts["rows"], "w", newline="") as rh:
            _write_rows(rh, records)
    if opts.get("plot_dir"):
        from .plots import plot_sweep
        plot_sweep(rows, opts["plot_dir"])
    return EXIT_OK


def ogp_trial(task):
    from .ogp import find_witness, phi_profile
    from .sensing import generate_binary_instance

    inst = generate_binary_instance(task["n"], task["k"], task["kprime"], task["m"],
                                    sigma=task["sigma"], mode=task["mode"], seed=task["seed"],
                                    noise_kind=task["noise"])
    prof = phi_profile(inst, task["kprime"], task["budget"])
    supports = [None if x is None else np.flatnonzero(x).tolist() for x in prof.argmin]
    return dict(seed=task["seed"], phi=prof.phi.tolist(), supports=supports,
                witness=find_witness(prof))


def cmd_ogp(opts):
    from .ogp import gamma_curve, overlap_count

    seed = _seed(opts)
    n, k, m = opts["n"], opts["k"], opts["m"]
    kprime = opts["kprime"] if opts["kprime"] is not None else k
    if opts["trials"] < 1:
        raise InvalidArgument("--trials must be >= 1")
    curve = gamma_curve(n, k, kprime, m, opts["alpha"])
    need = sum(overlap_count(n, k, kprime, l)[0] for l in range(min(k, kprime) + 1))
    if need > opts["budget"]:
        raise BudgetExceeded(need, opts["budget"])
    tasks = [dict(n=n, k=k, kprime=kprime, m=m, sigma=opts["sigma"], mode=opts["mode"],
                  noise=opts["noise"], budget=opts["budget"], seed=seed + j)
             for j in range(opts["trials"])]
    results = sorted(_map(ogp_trial, tasks, _workers(opts)), key=lambda r: r["seed"])

    out_dir = opts["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "ogp_curve.csv"), "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["schema", "ell", "logN", "gamma", "clamped"])
        for l, lg, g, c in zip(curve.ell, curve.logN, curve.gamma, curve.clamped):
            w.writerow([SCHEMA_CURVE, int(l), _fmt(float(lg)), _fmt(float(g)), _fmt(bool(c))])
    passes = witnesses = 0
    with open(os.path.join(out_dir, "ogp_profile.csv"), "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(["schema", "seed", "ell", "phi", "argmin_support_csv"])
        for r in results:
            phi = np.array(r["phi"])
            passes += bool(np.all(phi >= curve.gamma))
            witnesses += r["witness"] is not None
            for l, (p, sup) in enumerate(zip(r["phi"], r["supports"])):
                w.writerow([SCHEMA_PROFILE, r["seed"], l, _fmt(float(p)),
                            "" if sup is None else ",".join(map(str, sup))])
    w = _writer(sys.stdout)
    w.writerow(["schema", "n", "k", "kprime", "m", "alpha", "trials", "ell_c", "lower_bound_pass",
                "pass_fraction", "witness_fraction"])
    w.writerow([SCHEMA_OGP, n, k, kprime, m, _fmt(curve.alpha), len(results), curve.ell_c,
                passes, _fmt(passes / len(results)), _fmt(witnesses / len(results))])
    if opts.get("plot_dir"):
        from .plots import plot_ogp
        plot_ogp(curve, results, opts["plot_dir"])
    return EXIT_OK


def cmd_validate(opts):
    from .validation import run_suites

    seed = _seed(opts)
    rows = run_suites(opts["suite"], seed=seed, t=opts["t"], D=opts["D"], trials=opts["trials"])
    fh, close = _open_out(opts.get("out"))
    try:
        w = _writer(fh)
        w.writerow(["schema", "suite", "case", "value", "bound", "pass"])
        for suite, case, value, bound, ok in rows:
            w.writerow([SCHEMA_VALIDATE, suite, case, _fmt(float(value)), _fmt(float(bound)),
                        _fmt(bool(ok))])
    finally:
        if close:
            fh.close()
    return EXIT_OK if all(r[4] for r in rows) else EXIT_FAILED


COMMANDS = dict(gen=cmd_gen, run=cmd_run, sweep=cmd_sweep, ogp=cmd_ogp, validate=cmd_validate)


def main(argv=None):
    parser = build_parser()
    try:
        opts = resolve(parser, sys.argv[1:] if argv is None else argv)
        return COMMANDS[opts["command"]](opts)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except FormatError as exc:
        print(f"error: bad instance file: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InvalidArgument, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except QuadSparseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
