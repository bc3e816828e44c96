"""Spectral initialization for sparse quadratic sensing.

Pipeline: diagonal correlations pick a pivot coordinate, the pivot column
of the correlation estimator is thresholded to get a support, and the top
eigenvector of the support-restricted symmetrized data matrix gives the
direction.  Its scale is the square root of that matrix's operator norm.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DegenerateInstance, DegenerateSupport, InvalidArgument
from .linalg import canonical_sign, embed, index_set, top_eigpair

DEFAULT_C_THR = 3.0


@dataclass(frozen=True, eq=False)
class InitEstimate:
    pivot: int
    pivot_value: float
    support: np.ndarray
    x_init: np.ndarray
    phi: float


def diag_estimate(instance):
    """x_hat[l] = (1/m) sum_i A_i[l, l] b_i, an unbiased estimate of x0[l]^2."""
    return (instance.b @ instance.ensemble.diag()) / instance.m


def select_pivot(diag):
    diag = np.asarray(diag, dtype=np.float64)
    p = int(np.argmax(diag))  # first maximum on ties
    if not diag[p] > 0:
        raise DegenerateInstance("no positive diagonal correlation to pivot on")
    return p, math.sqrt(max(diag[p], 0.0))


def column_estimate(instance, pivot):
    """y_hat = (1/m) sum_i b_i A_i[:, pivot], estimating x0[pivot] * x0."""
    if not 0 <= pivot < instance.n:
        raise InvalidArgument("pivot out of range")
    col = instance.ensemble.cols([pivot])[:, :, 0]
    return (instance.b @ col) / instance.m


def norm_estimate(instance):
    """Data-driven estimate of ||x0||^2 from the second moment of b."""
    b = instance.b
    second = float(b @ b) / instance.m
    return math.sqrt(max(second - instance.noise_var(), 0.0))


def support_threshold(norm_sq_est, m, C_thr):
    return C_thr * math.sqrt(math.log(m) / m) * norm_sq_est


def support_select(yhat, norm_sq_est, m, C_thr=DEFAULT_C_THR):
    if norm_sq_est <= 0:
        raise DegenerateSupport("norm estimate is zero; no threshold can be set")
    if C_thr <= 0:
        raise InvalidArgument("C_thr must be positive")
    yhat = np.asarray(yhat, dtype=np.float64)
    S = np.flatnonzero(np.abs(yhat) > support_threshold(norm_sq_est, m, C_thr))
    if S.size == 0:
        raise DegenerateSupport("threshold removed every coordinate; raise m or lower C_thr")
    return S


def spectral_matrix(instance, support):
    """(1/m) sum_i b_i ((A_i + A_i^T)/2) restricted to support x support."""
    B = instance.ensemble.block(support, support)
    M = np.einsum("i,irc->rc", instance.b, B) / instance.m
    return 0.5 * (M + M.T)


def spectral_from_matrix(M, support, n, pivot, pivot_value):
    """Scaled top eigenvector of M embedded into R^n.

    The pivot coordinate, when in the support, is replaced by pivot_value
    carrying the eigenvector's sign there.
    """
    support = index_set(support, n)
    if support.size == 0:
        raise DegenerateSupport("empty support")
    lam, v = top_eigpair(M)
    phi = math.sqrt(abs(lam))
    xs = phi * v
    hit = np.flatnonzero(support == pivot)
    if hit.size:
        j = hit[0]
        xs[j] = pivot_value if xs[j] >= 0 else -pivot_value
    x = canonical_sign(embed(xs, support, n))
    return InitEstimate(int(pivot), float(pivot_value), support, x, phi)


def spectral_init(instance, support, pivot, pivot_value):
    support = index_set(support, instance.n)
    if support.size == 0:
        raise DegenerateSupport("empty support")
    return spectral_from_matrix(spectral_matrix(instance, support), support, instance.n,
                                pivot, pivot_value)


def initialize(instance, C_thr=DEFAULT_C_THR):
    pivot, pivot_value = select_pivot(diag_estimate(instance))
    yhat = column_estimate(instance, pivot)
    support = support_select(yhat, norm_estimate(instance), instance.m, C_thr)
    return spectral_init(instance, support, pivot, pivot_value)
