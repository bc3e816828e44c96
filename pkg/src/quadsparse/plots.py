"""PNG figures written next to the CSV output when --plot-dir is given.

Rendering uses the Agg backend and strips the Software metadata so the
bytes depend only on the data and the matplotlib version.
"""

import os

import numpy as np

_META = {"Software": None}


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _save(fig, plot_dir, name):
    os.makedirs(plot_dir, exist_ok=True)
    path = os.path.join(plot_dir, name)
    fig.savefig(path, dpi=100, metadata=_META)
    return path


def plot_traces(records, plot_dir):
    """Sign-resolved error against iteration, one line per seed."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    drawn = 0
    for r in records:
        tr = r.get("trace") or []
        if not tr:
            continue
        it = [t[0] for t in tr]
        err = np.maximum([t[1] for t in tr], 1e-300)
        ax.semilogy(it, err, lw=1, label=f"seed {r['seed']}")
        drawn += 1
    if not drawn:
        # init-only runs have no iterations; show the final errors instead
        ax.bar([str(r["seed"]) for r in records], [r["final_error"] for r in records])
        ax.set_xlabel("seed")
    else:
        ax.set_xlabel("iteration")
        if drawn <= 10:
            ax.legend(fontsize=7)
    ax.set_ylabel("sign-resolved error")
    ax.set_title(f"{records[0]['algorithm']}  n={records[0]['n']} k={records[0]['k']} "
                 f"m={records[0]['m']}")
    fig.tight_layout()
    path = _save(fig, plot_dir, "run_errors.png")
    plt.close(fig)
    return path


def plot_sweep(rows, plot_dir):
    """Success rate against m for each (n, k, mu0, sigma)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    lines = {}
    for row in rows:
        key = (row["n"], row["k"], row["mu0"], row["sigma"])
        lines.setdefault(key, []).append((row["m"], row["success_rate"]))
    for (n, k, mu0, sigma), pts in sorted(lines.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                label=f"n={n} k={k} mu0={mu0:g} sigma={sigma:g}")
    ax.set_xlabel("m")
    ax.set_ylabel("success rate")
    ax.set_ylim(-0.05, 1.05)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = _save(fig, plot_dir, "sweep_success.png")
    plt.close(fig)
    return path


def plot_ogp(curve, results, plot_dir):
    """First-moment curve with the brute-force profiles overlaid."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for r in results:
        phi = np.array(r["phi"], dtype=float)
        ax.plot(curve.ell, phi, color="0.7", lw=0.8)
    ax.plot(curve.ell, curve.gamma, color="C3", lw=2, marker="o", label="first-moment curve")
    ax.set_xlabel("overlap")
    ax.set_ylabel("sqrt(min risk)")
    ax.set_title(f"n={curve.n} k={curve.k} k'={curve.kprime} m={curve.m}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = _save(fig, plot_dir, "ogp_curve.png")
    plt.close(fig)
    return path
