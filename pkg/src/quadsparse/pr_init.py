"""Spectral initialization for sparse phase retrieval, b_i = <a_i, x0>^2 + eps_i.

The pivot is the coordinate with the largest intensity correlation
(1/m) sum_i a_i[k]^2 b_i, whose mean is ||x0||^2 + 2 x0[k]^2.  The support is
read off the cross-correlations with the pivot column, and the direction is
the top eigenvector of the b-weighted covariance restricted to that support.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import rng as _rng
from .errors import DegenerateSupport, InvalidArgument
from .init_quadratic import InitEstimate
from .linalg import as_vector, canonical_sign, embed, index_set, ordered_matvec, top_eigpair
from .sensing import draw_noise, noise_variance, resolve_mode, spike_signal

DEFAULT_C_THR = 0.12
CHUNK_ROWS = 4096


class VectorEnsemble:
    """m i.i.d. standard Gaussian vectors a_i in R^n.

    Entry a_i[c] is drawn at counter (c, 0, i) of the vector stream, so the
    streamed and materialized modes hold the same bits.  All reductions walk
    the rows in fixed chunks of CHUNK_ROWS so both modes also sum in the same
    order.
    """

    def __init__(self, n, m, seed, mode="streamed", data=None):
        if n < 1 or m < 1:
            raise InvalidArgument("n and m must be positive")
        self.n, self.m, self.seed = int(n), int(m), int(seed)
        # the vectors hold n*m entries, so "auto" compares n*m to the limit
        self.mode = resolve_mode(mode, 1, self.n * self.m)
        if self.mode == "materialized":
            if data is None:
                data = self._generate(0, self.m)
            data = np.asarray(data, dtype=np.float64)
            if data.shape != (self.m, self.n):
                raise InvalidArgument("materialized data has the wrong shape")
            data.setflags(write=False)
        self.data = data

    def _generate(self, lo, hi, C=None):
        C = np.arange(self.n) if C is None else np.asarray(C)
        i = np.arange(lo, hi)[:, None]
        return _rng.normal_at(self.seed, i, 0, C[None, :], _rng.TAG_VECTOR)

    def chunk(self, lo, hi, C=None):
        if self.data is not None:
            blk = self.data[lo:hi] if C is None else self.data[lo:hi][:, np.asarray(C)]
            # fancy indexing can return a Fortran-ordered copy; keep one layout
            return np.ascontiguousarray(blk)
        return self._generate(lo, hi, C)

    def chunks(self, C=None):
        for lo in range(0, self.m, CHUNK_ROWS):
            hi = min(lo + CHUNK_ROWS, self.m)
            yield lo, hi, self.chunk(lo, hi, C)

    def dense(self, C=None):
        """All vectors as an (m, n) array, or (m, |C|) restricted to columns C."""
        if self.data is not None and C is None:
            return self.data
        return np.concatenate([blk for _, _, blk in self.chunks(C)], axis=0)

    def materialize(self):
        if self.data is not None:
            return self
        return VectorEnsemble(self.n, self.m, self.seed, "materialized")

    def products(self, x):
        """Vector of <a_i, x> over i."""
        x = as_vector(x)
        S = np.flatnonzero(x)
        out = np.zeros(self.m)
        if S.size == 0:
            return out
        for lo, hi, blk in self.chunks(S):
            out[lo:hi] = ordered_matvec(blk, x[S])
        return out

    def weighted_sum(self, w, fn):
        """sum_i w_i fn(a_i) accumulated chunk by chunk."""
        acc = None
        for lo, hi, blk in self.chunks():
            part = w[lo:hi] @ fn(blk)
            acc = part if acc is None else acc + part
        return acc


@dataclass(frozen=True, eq=False)
class PRInstance:
    n: int
    k: int
    m: int
    x0: np.ndarray
    mu0: float
    sigma: float
    noise_kind: str
    noise: np.ndarray
    b: np.ndarray
    ensemble: VectorEnsemble = field(repr=False)
    seed: int
    mu0_target: float = float("nan")
    kind: str = "pr"
    kprime: int = 0

    @property
    def mode(self):
        return self.ensemble.mode

    @property
    def a(self):
        return self.ensemble.dense()

    def noise_var(self):
        return noise_variance(self.sigma, self.noise_kind)


def generate_pr_instance(n, k, m, mu0_target, sigma=0.0, noise_kind="gaussian",
                         mode="auto", seed=0, data=None):
    if m < 1:
        raise InvalidArgument("m must be >= 1")
    x0 = spike_signal(n, k, mu0_target, seed)
    ens = VectorEnsemble(n, m, seed, mode, data=data)
    noise = draw_noise(m, sigma, noise_kind, seed)
    b = ens.products(x0) ** 2 + noise
    for arr in (x0, noise, b):
        arr.setflags(write=False)
    mu0 = float(np.abs(x0).max() / np.linalg.norm(x0))
    return PRInstance(n, k, m, x0, mu0, float(sigma), noise_kind, noise, b, ens,
                      int(seed), float(mu0_target))


def pr_scale(instance):
    """phi = sqrt(mean(b)); E b_i = ||x0||^2 and the noise has mean zero."""
    return math.sqrt(max(float(np.mean(instance.b)), 0.0))


def intensity_correlations(instance):
    """(1/m) sum_i a_i[k]^2 b_i for every k."""
    return instance.ensemble.weighted_sum(instance.b, np.square) / instance.m


def pr_pivot(instance):
    return int(np.argmax(intensity_correlations(instance)))


def cross_correlations(instance, pivot):
    """v_hat[l] = (1/m) sum_i b_i a_i[pivot] a_i[l]."""
    if not 0 <= pivot < instance.n:
        raise InvalidArgument("pivot out of range")
    ens = instance.ensemble
    acc = np.zeros(instance.n)
    for lo, hi, blk in ens.chunks():
        acc += (instance.b[lo:hi] * blk[:, pivot]) @ blk
    return acc / instance.m


def pr_threshold(m, k, C_thr):
    return C_thr * math.sqrt(math.log(m) ** 4 * math.log(k) ** 2 / m) if k > 1 else 0.0


def support_from_correlations(vhat, phi2, m, k, pivot, C_thr=DEFAULT_C_THR):
    """Pivot plus every l with |v_hat[l]| / phi^2 above the threshold.

    Dividing by phi^2 makes the rule invariant to the scale of x0.  With k = 1
    the log k factor vanishes; only the pivot is kept then.
    """
    if C_thr <= 0:
        raise InvalidArgument("C_thr must be positive")
    vhat = np.asarray(vhat, dtype=np.float64)
    if not 0 <= pivot < vhat.size:
        raise InvalidArgument("pivot out of range")
    if k == 1 or phi2 <= 0:
        return np.array([pivot], dtype=np.int64)
    keep = np.abs(vhat) / phi2 > pr_threshold(m, k, C_thr)
    keep[pivot] = True
    return np.flatnonzero(keep)


def pr_support(instance, pivot, C_thr=DEFAULT_C_THR):
    vhat = cross_correlations(instance, pivot)
    return support_from_correlations(vhat, pr_scale(instance) ** 2, instance.m, instance.k,
                                     pivot, C_thr)


def pr_spectral_matrix(instance, support):
    """(1/m) sum_i b_i (a_i)_S (a_i)_S^T."""
    S = index_set(support, instance.n)
    M = np.zeros((S.size, S.size))
    for lo, hi, blk in instance.ensemble.chunks(S):
        M += (blk * instance.b[lo:hi, None]).T @ blk
    M /= instance.m
    return 0.5 * (M + M.T)


def pr_spectral(instance, support, pivot=None):
    support = index_set(support, instance.n)
    if support.size == 0:
        raise DegenerateSupport("empty support")
    lam, v = top_eigpair(pr_spectral_matrix(instance, support))
    phi = pr_scale(instance)
    x = canonical_sign(embed(phi * v, support, instance.n))
    if pivot is None:
        pivot = int(support[np.argmax(np.abs(v))])
    return InitEstimate(int(pivot), float(abs(x[pivot])), support, x, phi)


def pr_initialize(instance, C_thr=DEFAULT_C_THR):
    pivot = pr_pivot(instance)
    return pr_spectral(instance, pr_support(instance, pivot, C_thr), pivot)
