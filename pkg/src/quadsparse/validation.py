"""Invariant suites behind ``quadsparse validate``.

Each suite yields rows (suite, case, value, bound, passed).  The kernels are
compared against plain Python loops written directly from the definitions.
"""

from itertools import combinations
import math

import numpy as np

from . import rng as _rng
from .linalg import top_eigpair
from .ogp import chi2_tail_validate, overlap_count
from .sensing import empirical_risk, generate_instance, risk_gradient

SUITES = ("chi2", "oracle", "gradient", "eigen", "combinatorics")


def _naive_risk(A, b, x):
    m, n = len(A), len(x)
    total = 0.0
    for i in range(m):
        q = 0.0
        for r in range(n):
            for c in range(n):
                q += A[i][r][c] * x[r] * x[c]
        total += (q - b[i]) ** 2
    return total / m


def _naive_grad(A, b, x):
    m, n = len(A), len(x)
    g = [0.0] * n
    for i in range(m):
        q = sum(A[i][r][c] * x[r] * x[c] for r in range(n) for c in range(n))
        for l in range(n):
            d = sum((A[i][l][c] + A[i][c][l]) * x[c] for c in range(n))
            g[l] += 2.0 / m * (q - b[i]) * d
    return g


def _small_instances(count, seed):
    g = _rng.generator(seed, _rng.TAG_PROBE)
    for j in range(count):
        n = int(g.integers(2, 9))
        k = int(g.integers(1, n + 1))
        m = int(g.integers(1, 11))
        mu0 = 1.0 if k == 1 else float(g.uniform(1 / math.sqrt(k), 0.99))
        inst = generate_instance(n, k, m, mu0, sigma=0.1, mode="materialized", seed=seed + j)
        yield inst, g.standard_normal(n)


def suite_oracle(seed, count=20):
    worst_r = worst_g = 0.0
    for inst, x in _small_instances(count, seed):
        A = inst.ensemble.data.tolist()
        b = inst.b.tolist()
        xl = x.tolist()
        worst_r = max(worst_r, abs(empirical_risk(inst, x) - _naive_risk(A, b, xl)))
        gn = np.array(_naive_grad(A, b, xl))
        worst_g = max(worst_g, float(np.abs(risk_gradient(inst, x) - gn).max()))
    yield "oracle", "risk_vs_loop", worst_r, 1e-12, worst_r <= 1e-12
    yield "oracle", "gradient_vs_loop", worst_g, 1e-12, worst_g <= 1e-12


def suite_gradient(seed, count=20, h=1e-5):
    worst = 0.0
    for inst, x in _small_instances(count, seed):
        g = risk_gradient(inst, x)
        fd = np.empty_like(x)
        for l in range(x.size):
            e = np.zeros_like(x)
            e[l] = h
            fd[l] = (empirical_risk(inst, x + e) - empirical_risk(inst, x - e)) / (2 * h)
        worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12)))
    yield "gradient", "central_differences", worst, 1e-5, worst < 1e-5


def suite_eigen(seed, count=30):
    g = _rng.generator(seed, _rng.TAG_PROBE)
    worst_l = worst_v = 0.0
    for _ in range(count):
        n = int(g.integers(1, 31))
        B = g.standard_normal((n, n))
        M = (B + B.T) / 2
        lam, v = top_eigpair(M)
        w, V = np.linalg.eigh(M)
        j = int(np.argmax(np.abs(w)))
        worst_l = max(worst_l, abs(lam - w[j]) / max(abs(w[j]), 1e-300))
        worst_v = max(worst_v, 1 - abs(float(v @ V[:, j])))
    yield "eigen", "eigenvalue_rel_error", worst_l, 1e-8, worst_l < 1e-8
    yield "eigen", "eigenvector_misalignment", worst_v, 1e-8, worst_v < 1e-8


def suite_combinatorics(seed=0, n=10):
    bad = 0
    for k in range(1, 4):
        for kp in range(k, 6):
            counts = [0] * (min(k, kp) + 1)
            for T in combinations(range(n), kp):
                counts[sum(1 for t in T if t < k)] += 1
            for l, c in enumerate(counts):
                bad += overlap_count(n, k, kp, l)[0] != c
    yield "combinatorics", "overlap_count_vs_enumeration", bad, 0, bad == 0


def suite_chi2(seed, t=2.0, D=1, trials=100_000):
    chk = chi2_tail_validate(D, np.ones(D), t, trials, seed)
    yield "chi2", f"upper_tail_D{D}_t{t:g}", chk.upper_emp, chk.slack_bound, chk.upper_emp <= chk.slack_bound
    yield "chi2", f"lower_tail_D{D}_t{t:g}", chk.lower_emp, chk.slack_bound, chk.lower_emp <= chk.slack_bound


def run_suites(which, seed, t=2.0, D=1, trials=100_000):
    names = SUITES if which == "all" else (which,)
    rows = []
    for name in names:
        if name == "chi2":
            rows.extend(suite_chi2(seed, t, D, trials))
        elif name == "oracle":
            rows.extend(suite_oracle(seed))
        elif name == "gradient":
            rows.extend(suite_gradient(seed))
        elif name == "eigen":
            rows.extend(suite_eigen(seed))
        else:
            rows.extend(suite_combinatorics(seed))
    return rows
