"""Overlap landscape of the binary sparse quadratic problem.

For a planted binary x0 with k ones and candidates x with k' ones, the
overlap l = |supp x & supp x0| splits the candidate set into classes of
size N(l) = C(k, l) C(n-k, k'-l).  ``gamma_curve`` evaluates the
first-moment lower bound on sqrt(min risk) over each class and
``enumerate_phi`` computes the exact minimum by brute force at desk scale.
"""

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np

from . import rng as _rng
from .errors import BudgetExceeded, InvalidArgument

DEFAULT_BUDGET = 10_000_000
BATCH = 2048


def overlap_count(n, k, kprime, ell):
    """(exact count, log count); log is -inf when the class is empty."""
    if not (0 <= k <= n and 0 <= kprime <= n):
        raise InvalidArgument("need 0 <= k, k' <= n")
    if ell < 0 or ell > min(k, kprime) or kprime - ell > n - k:
        return 0, -math.inf
    exact = math.comb(k, ell) * math.comb(n - k, kprime - ell)
    return exact, log_comb(k, ell) + log_comb(n - k, kprime - ell)


def log_comb(a, b):
    return math.lgamma(a + 1) - math.lgamma(b + 1) - math.lgamma(a - b + 1)


@dataclass(frozen=True, eq=False)
class OGPCurve:
    n: int
    k: int
    kprime: int
    m: int
    alpha: float
    ell: np.ndarray
    logN: np.ndarray
    gamma: np.ndarray
    clamped: np.ndarray
    ell_c: int


def _gamma_point(k, kprime, m, ell, logN, alpha):
    """sqrt(((k')^2 + k^2 - 2 l^2) * max(1 - 2 sqrt((log N + alpha)/m), 0)) and the clamp flag."""
    if logN == -math.inf:
        return 0.0, True
    inner = 1.0 - 2.0 * math.sqrt((logN + alpha) / m)
    clamped = inner < 0.0
    mass = kprime * kprime + k * k - 2 * ell * ell
    return math.sqrt(mass * max(inner, 0.0)), clamped


def gamma_curve(n, k, kprime, m, alpha=None):
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    if not 1 <= k <= kprime <= n:
        raise InvalidArgument("need 1 <= k <= k' <= n")
    alpha = math.log(k) if alpha is None else float(alpha)
    if alpha < 0:
        raise InvalidArgument("alpha must be non-negative")
    ell = np.arange(min(k, kprime) + 1)
    logN = np.array([overlap_count(n, k, kprime, int(l))[1] for l in ell])
    pts = [_gamma_point(k, kprime, m, int(l), lg, alpha) for l, lg in zip(ell, logN)]
    gamma = np.array([g for g, _ in pts])
    clamped = np.array([c for _, c in pts])
    return OGPCurve(n, k, kprime, m, alpha, ell, logN, gamma, clamped, int(np.argmax(gamma)))


def critical_overlap(curve):
    """(l_c, gamma(l_c) - max(gamma(0), gamma(1)))."""
    gamma = np.asarray(curve.gamma if hasattr(curve, "gamma") else curve, dtype=np.float64)
    if gamma.size == 0:
        raise InvalidArgument("empty curve")
    ell_c = int(np.argmax(gamma))
    return ell_c, float(gamma[ell_c] - gamma[:2].max())


def is_unimodal(values):
    """True when the sequence rises (weakly) to a single peak and then falls."""
    d = np.sign(np.diff(np.asarray(values, dtype=np.float64)))
    d = d[d != 0]
    return bool(np.all(np.diff(d) <= 0))


def upper_envelope(curve):
    """gamma(l) + k' log^2 k' / sqrt(m), the second-moment upper bound."""
    kp = curve.kprime
    return curve.gamma + kp * math.log(kp) ** 2 / math.sqrt(curve.m)


@dataclass(frozen=True, eq=False)
class PhiProfile:
    ell: np.ndarray
    phi: np.ndarray
    argmin: list
    seed: int


def _risk_of_supports(full, b, supports):
    """mean_i (sum_{r,c in T} A_i[r,c] - b_i)^2 for a batch of supports T."""
    # gather the |T| x |T| blocks: (m, batch, t, t)
    T = np.asarray(supports)
    blocks = full[:, T[:, :, None], T[:, None, :]]
    q = blocks.sum(axis=(2, 3))  # (m, batch)
    r = q - b[:, None]
    return np.einsum("ib,ib->b", r, r) / b.size


def enumerate_phi(instance, ell, kprime=None, budget=DEFAULT_BUDGET):
    """Exact min of sqrt(risk) over binary k'-sparse x with overlap ell.

    Candidates are visited lexicographically (on-support choice, then
    off-support choice); the first minimum wins ties.
    Returns (phi, argmin vector).
    """
    n, k = instance.n, instance.k
    kprime = instance.kprime if kprime is None else kprime
    kprime = kprime or k
    count, _ = overlap_count(n, k, kprime, ell)
    if count == 0:
        raise InvalidArgument(f"no binary {kprime}-sparse vector has overlap {ell}")
    if count > budget:
        raise BudgetExceeded(count, budget)
    on = np.flatnonzero(instance.x0)
    off = np.flatnonzero(instance.x0 == 0)
    full = instance.ensemble.block(np.arange(n), np.arange(n))
    b = np.asarray(instance.b)
    best, best_T = math.inf, None
    batch = []

    def flush():
        nonlocal best, best_T
        risks = _risk_of_supports(full, b, batch)
        j = int(np.argmin(risks))
        if risks[j] < best:
            best, best_T = float(risks[j]), batch[j]
        batch.clear()

    for A in combinations(on, ell):
        for B in combinations(off, kprime - ell):
            batch.append(sorted(A + B))
            if len(batch) == BATCH:
                flush()
    if batch:
        flush()
    x = np.zeros(n)
    x[list(best_T)] = 1.0
    return math.sqrt(max(best, 0.0)), x


def phi_profile(instance, kprime=None, budget=DEFAULT_BUDGET):
    kprime = (instance.kprime if kprime is None else kprime) or instance.k
    total = sum(overlap_count(instance.n, instance.k, kprime, l)[0]
                for l in range(min(instance.k, kprime) + 1))
    if total > budget:
        raise BudgetExceeded(total, budget)
    ells, phis, args = [], [], []
    for l in range(min(instance.k, kprime) + 1):
        ells.append(l)
        if overlap_count(instance.n, instance.k, kprime, l)[0] == 0:
            # an empty class has no minimum; +inf keeps the witness test positional
            phis.append(math.inf)
            args.append(None)
            continue
        phi, x = enumerate_phi(instance, l, kprime, budget)
        phis.append(phi)
        args.append(x)
    return PhiProfile(np.array(ells), np.array(phis), args, instance.seed)


def ogp_witness(phi, ell1, z1, z2, ell2):
    """max(phi(l1), phi(l2)) < min of phi over the open interval (z1, z2)."""
    values = np.asarray(phi.phi if hasattr(phi, "phi") else phi, dtype=np.float64)
    top = values.size - 1
    if not (0 <= ell1 <= z1 < z2 - 1 < z2 <= ell2 <= top):
        raise InvalidArgument("need 0 <= l1 <= z1 < z2 - 1 < z2 <= l2 <= k")
    inner = values[z1 + 1:z2].min()
    return bool(max(values[ell1], values[ell2]) < inner)


def find_witness(phi):
    """First (l1, z1, z2, l2) for which ogp_witness holds, or None."""
    values = np.asarray(phi.phi if hasattr(phi, "phi") else phi, dtype=np.float64)
    top = values.size - 1
    for z1 in range(top + 1):
        for z2 in range(z1 + 2, top + 1):
            inner = values[z1 + 1:z2].min()
            l1 = int(np.argmin(values[:z1 + 1]))
            l2 = z2 + int(np.argmin(values[z2:]))
            if max(values[l1], values[l2]) < inner:
                return l1, z1, z2, l2
    return None


@dataclass(frozen=True)
class TailCheck:
    upper_emp: float
    lower_emp: float
    bound: float
    slack_bound: float
    passed: bool


def chi2_tail_validate(D, a, t, trials, seed, chunk=50_000):
    """Empirical chi-squared tail frequencies for Z = sum a_i (Y_i^2 - 1).

    Upper event Z > 2||a||_2 sqrt(t) + 2||a||_inf t, lower event
    Z < -2||a||_2 sqrt(t).  Passes when both frequencies are at most
    e^-t (1 + 3 / sqrt(trials e^-t)), a three-sigma binomial allowance.
    """
    a = np.broadcast_to(np.asarray(a, dtype=np.float64), (int(D),))
    if np.any(a < 0):
        raise InvalidArgument("weights must be non-negative")
    if trials < 1000:
        raise InvalidArgument("need at least 1000 trials")
    if t <= 0:
        raise InvalidArgument("t must be positive")
    l2, linf = float(np.linalg.norm(a)), float(a.max(initial=0.0))
    hi = 2 * l2 * math.sqrt(t) + 2 * linf * t
    lo = -2 * l2 * math.sqrt(t)
    g = _rng.generator(seed, _rng.TAG_CHI2)
    up = down = 0
    done = 0
    while done < trials:
        s = min(chunk, trials - done)
        Y = g.standard_normal((s, a.size))
        Z = (Y * Y - 1.0) @ a
        up += int(np.count_nonzero(Z > hi))
        down += int(np.count_nonzero(Z < lo))
        done += s
    bound = math.exp(-t)
    slack = bound * (1 + 3 / math.sqrt(trials * bound))
    ue, le = up / trials, down / trials
    return TailCheck(ue, le, bound, slack, ue <= slack and le <= slack)


@dataclass(frozen=True)
class InformativeRange:
    kmin: int
    kmax: int
    empty: bool
    theorem_cap: float


def informative_range(n, k, m, C_log=1.0):
    """Integer range [k, floor(m / (C log m))] of informative k'.

    ``theorem_cap`` is min(m^(1/3) k^(2/3) log^(1/3) n, k m^(1/4) / log n),
    the extra restriction under which the landscape result is stated.
    """
    if m < 2 or C_log <= 0:
        raise InvalidArgument("need m >= 2 and C_log > 0")
    if not m > C_log * math.log(m):
        raise InvalidArgument("need m > C_log log m")
    kmax = math.floor(m / (C_log * math.log(m)))
    ln = math.log(n)
    cap = min(m ** (1 / 3) * k ** (2 / 3) * ln ** (1 / 3),
              k * m ** 0.25 / ln if ln > 0 else math.inf)
    return InformativeRange(k, kmax, kmax < k, cap)
