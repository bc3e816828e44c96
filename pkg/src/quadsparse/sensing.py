"""Quadratic sensing instances, empirical risk and its gradient.

Two storage modes share one entry generator (``rng.normal_at``), so a
materialized ensemble and a streamed one with the same seed hold the same
bits.  Streamed ensembles regenerate the rows and columns they are asked for
and keep a bounded LRU cache of them.  The risk and gradient kernels only
touch the rows/columns indexed by the support of ``x``, which keeps the cost
of a streamed evaluation at O(m * n * |supp x|).
"""

from collections import OrderedDict
from dataclasses import dataclass, field
import math

import numpy as np

from . import rng as _rng
from .errors import InvalidArgument
from .linalg import as_vector, ordered_matvec

MATERIALIZE_LIMIT = 10_000_000
NOISE_KINDS = ("gaussian", "laplace", "none")
MODES = ("materialized", "streamed")


def resolve_mode(mode, n, m):
    if mode in (None, "auto"):
        return "materialized" if n * n * m <= MATERIALIZE_LIMIT else "streamed"
    if mode not in MODES:
        raise InvalidArgument(f"unknown ensemble mode {mode!r}")
    return mode


class SensingEnsemble:
    """m i.i.d. standard Gaussian n x n matrices A_i.

    ``data`` (shape (m, n, n)) is only held in materialized mode.
    """

    def __init__(self, n, m, seed, mode="streamed", data=None, cache_bytes=512 * 2**20):
        if n < 1 or m < 1:
            raise InvalidArgument("n and m must be positive")
        self.n, self.m, self.seed = int(n), int(m), int(seed)
        self.mode = resolve_mode(mode, n, m)
        self._cache = OrderedDict()
        self._cache_bytes = cache_bytes
        self._cached = 0
        if self.mode == "materialized":
            if data is None:
                data = self._generate(np.arange(self.m), np.arange(self.n), np.arange(self.n))
            data = np.asarray(data, dtype=np.float64)
            if data.shape != (self.m, self.n, self.n):
                raise InvalidArgument("materialized data has the wrong shape")
            data.setflags(write=False)
        self.data = data

    def _generate(self, i, r, c):
        i = np.asarray(i)[:, None, None]
        r = np.asarray(r)[None, :, None]
        c = np.asarray(c)[None, None, :]
        return _rng.normal_at(self.seed, i, r, c, _rng.TAG_MATRIX)

    def _cached_slice(self, kind, j):
        key = (kind, int(j))
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        idx = np.arange(self.m)
        full = np.arange(self.n)
        if kind == "row":
            arr = self._generate(idx, [j], full)[:, 0, :]
        else:
            arr = self._generate(idx, full, [j])[:, :, 0]
        arr.setflags(write=False)
        self._cache[key] = arr
        self._cached += arr.nbytes
        while self._cached > self._cache_bytes and len(self._cache) > 1:
            _, old = self._cache.popitem(last=False)
            self._cached -= old.nbytes
        return arr

    def rows(self, R):
        """Array of shape (m, |R|, n) holding A_i[r, :] for r in R."""
        R = np.asarray(R, dtype=np.int64)
        if self.data is not None:
            return np.ascontiguousarray(self.data[:, R, :])
        if R.size == 0:
            return np.zeros((self.m, 0, self.n))
        return np.stack([self._cached_slice("row", r) for r in R], axis=1)

    def cols(self, C):
        """Array of shape (m, n, |C|) holding A_i[:, c] for c in C."""
        C = np.asarray(C, dtype=np.int64)
        if self.data is not None:
            return np.ascontiguousarray(self.data[:, :, C])
        if C.size == 0:
            return np.zeros((self.m, self.n, 0))
        return np.stack([self._cached_slice("col", c) for c in C], axis=2)

    def block(self, R, C):
        """Array of shape (m, |R|, |C|)."""
        R = np.asarray(R, dtype=np.int64)
        C = np.asarray(C, dtype=np.int64)
        if self.data is not None:
            return np.ascontiguousarray(self.data[:, R[:, None], C[None, :]])
        return self._generate(np.arange(self.m), R, C)

    def diag(self):
        """Array of shape (m, n) holding A_i[l, l]."""
        if self.data is not None:
            return np.diagonal(self.data, axis1=1, axis2=2).copy()
        full = np.arange(self.n)
        return _rng.normal_at(self.seed, np.arange(self.m)[:, None], full[None, :],
                              full[None, :], _rng.TAG_MATRIX)

    def matrix(self, i):
        if self.data is not None:
            return self.data[i]
        full = np.arange(self.n)
        return self._generate([i], full, full)[0]

    def materialize(self):
        if self.data is not None:
            return self
        return SensingEnsemble(self.n, self.m, self.seed, "materialized")

    def row(self, r):
        """A_i[r, :] over i, shape (m, n)."""
        if self.data is not None:
            return self.data[:, r, :]
        return self._cached_slice("row", r)

    def col(self, c):
        """A_i[:, c] over i, shape (m, n)."""
        if self.data is not None:
            return self.data[:, :, c]
        return self._cached_slice("col", c)

    # --- support-aware kernels -------------------------------------------
    # Both modes run the same elementwise accumulation over slices, so they
    # agree bit for bit whatever the memory layout of the slices.

    def _combine(self, getter, x, S):
        acc = np.multiply(getter(S[0]), x[S[0]])
        tmp = np.empty_like(acc)
        for j in S[1:]:
            np.multiply(getter(j), x[j], out=tmp)
            acc += tmp
        return acc

    def left_products(self, y):
        """Matrix of shape (m, n) with rows y^T A_i."""
        y = as_vector(y)
        S = np.flatnonzero(y)
        if S.size == 0:
            return np.zeros((self.m, self.n))
        return self._combine(self.row, y, S)

    def quad_forms(self, x):
        """Vector of x^T A_i x over i."""
        x = as_vector(x)
        S = np.flatnonzero(x)
        if S.size == 0:
            return np.zeros(self.m)
        return ordered_matvec(self._combine(self.row, x, S)[:, S], x[S])

    def apply_sym(self, x):
        """Returns (q, G) with q_i = x^T A_i x and G[i] = (A_i + A_i^T) x."""
        x = as_vector(x)
        S = np.flatnonzero(x)
        if S.size == 0:
            return np.zeros(self.m), np.zeros((self.m, self.n))
        At_x = self._combine(self.row, x, S)
        A_x = self._combine(self.col, x, S)
        q = ordered_matvec(At_x[:, S], x[S])
        A_x += At_x
        return q, A_x


def measure(ensemble, x, i):
    """x^T A_i x for one sensing matrix."""
    x = as_vector(x)
    return float(x @ ensemble.matrix(i) @ x)


def noise_variance(sigma, noise_kind):
    """Variance of one noise draw for the given scale parameter."""
    if noise_kind == "none" or sigma == 0:
        return 0.0
    if noise_kind == "gaussian":
        return sigma * sigma
    if noise_kind == "laplace":
        return 2.0 * sigma * sigma
    raise InvalidArgument(f"unknown noise kind {noise_kind!r}")


def draw_noise(m, sigma, noise_kind, seed):
    if sigma < 0:
        raise InvalidArgument("sigma must be non-negative")
    if noise_kind not in NOISE_KINDS:
        raise InvalidArgument(f"unknown noise kind {noise_kind!r}")
    if noise_kind == "none" or sigma == 0:
        return np.zeros(m)
    g = _rng.generator(seed, _rng.TAG_NOISE)
    if noise_kind == "gaussian":
        return sigma * g.standard_normal(m)
    return g.laplace(0.0, sigma, m)


def spike_signal(n, k, mu0_target, seed):
    """Unit k-sparse vector with one entry of magnitude mu0_target.

    The other k-1 entries share the remaining mass equally; support, spike
    position and signs are random.
    """
    if not 1 <= k <= n:
        raise InvalidArgument("need 1 <= k <= n")
    lo = 1.0 / math.sqrt(k)
    if not (lo - 1e-15 <= mu0_target <= 1.0):
        raise InvalidArgument(f"mu0 target must lie in [1/sqrt(k), 1] = [{lo:.6g}, 1]")
    if k == 1 and mu0_target != 1.0:
        raise InvalidArgument("k = 1 forces mu0 = 1")
    if k > 1 and mu0_target == 1.0:
        raise InvalidArgument("mu0 = 1 requires k = 1")
    g = _rng.generator(seed, _rng.TAG_SIGNAL)
    support = g.permutation(n)[:k]
    signs = g.choice(np.array([-1.0, 1.0]), size=k)
    mags = np.empty(k)
    mags[0] = mu0_target
    if k > 1:
        mags[1:] = math.sqrt(max(1.0 - mu0_target**2, 0.0) / (k - 1))
    x0 = np.zeros(n)
    x0[support] = signs * mags
    return x0 / np.linalg.norm(x0)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    n: int
    k: int
    m: int
    x0: np.ndarray
    mu0: float
    sigma: float
    noise_kind: str
    noise: np.ndarray
    b: np.ndarray
    ensemble: SensingEnsemble = field(repr=False)
    seed: int
    mu0_target: float = float("nan")
    kind: str = "quadratic"
    kprime: int = 0

    @property
    def mode(self):
        return self.ensemble.mode

    def noise_var(self):
        return noise_variance(self.sigma, self.noise_kind)


def _freeze(*arrays):
    for a in arrays:
        a.setflags(write=False)


def generate_instance(n, k, m, mu0_target, sigma=0.0, noise_kind="gaussian",
                      mode="auto", seed=0, data=None):
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    x0 = spike_signal(n, k, mu0_target, seed)
    ens = SensingEnsemble(n, m, seed, resolve_mode(mode, n, m), data=data)
    noise = draw_noise(m, sigma, noise_kind, seed)
    b = ens.quad_forms(x0) + noise
    _freeze(x0, noise, b)
    mu0 = float(np.abs(x0).max() / np.linalg.norm(x0))
    return ProblemInstance(n, k, m, x0, mu0, float(sigma), noise_kind, noise, b, ens,
                           int(seed), float(mu0_target))


def generate_binary_instance(n, k, kprime, m, sigma=0.0, mode="auto", seed=0,
                             noise_kind="gaussian", data=None):
    if not (1 <= k <= kprime <= n):
        raise InvalidArgument("need 1 <= k <= k' <= n")
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    g = _rng.generator(seed, _rng.TAG_SUPPORT)
    x0 = np.zeros(n)
    x0[g.permutation(n)[:k]] = 1.0
    ens = SensingEnsemble(n, m, seed, resolve_mode(mode, n, m), data=data)
    noise = draw_noise(m, sigma, noise_kind, seed)
    b = ens.quad_forms(x0) + noise
    _freeze(x0, noise, b)
    return ProblemInstance(n, k, m, x0, float(1.0 / math.sqrt(k)), float(sigma), noise_kind,
                           noise, b, ens, int(seed), kind="binary", kprime=int(kprime))


def empirical_risk(instance, x):
    q = instance.ensemble.quad_forms(x)
    r = q - instance.b
    return float(r @ r) / instance.m


def residuals(instance, x):
    return instance.ensemble.quad_forms(x) - instance.b


def risk_gradient(instance, x):
    """(2/m) sum_i (x^T A_i x - b_i) (A_i + A_i^T) x."""
    q, G = instance.ensemble.apply_sym(x)
    return (2.0 / instance.m) * ((q - instance.b) @ G)


def risk_and_gradient(instance, x):
    q, G = instance.ensemble.apply_sym(x)
    r = q - instance.b
    return float(r @ r) / instance.m, (2.0 / instance.m) * (r @ G), r


def rip_estimate(ensemble, sparsity, rank, trials, seed):
    """Lower bound on the sparse/low-rank restricted isometry constant.

    Draws ``trials`` random matrices X supported on a random
    ``sparsity x sparsity`` block, of rank at most ``rank`` and unit Frobenius
    norm, and returns max |(1/m) sum_i <A_i, X>^2 - 1|.
    """
    n = ensemble.n
    if not 1 <= sparsity <= n:
        raise InvalidArgument("sparsity must lie in [1, n]")
    if rank < 1:
        raise InvalidArgument("rank must be >= 1")
    g = _rng.generator(seed, _rng.TAG_PROBE)
    worst = 0.0
    for _ in range(trials):
        R = np.sort(g.choice(n, sparsity, replace=False))
        C = np.sort(g.choice(n, sparsity, replace=False))
        U = g.standard_normal((sparsity, rank))
        V = g.standard_normal((sparsity, rank))
        X = U @ V.T
        X /= np.linalg.norm(X)
        vals = np.einsum("irc,rc->i", ensemble.block(R, C), X)
        worst = max(worst, abs(vals @ vals / ensemble.m - 1.0))
    return worst
