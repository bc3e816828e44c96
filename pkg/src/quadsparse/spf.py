"""Sparse power factorization.

Each outer step linearizes the quadratic model around the current unit
estimate y (rows y^T A_i / sqrt(m), right-hand side b / sqrt(m)), solves the
resulting k-sparse least-squares problem with L iterations of iterative hard
thresholding, and renormalizes.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DegenerateIterate, InvalidArgument
from .linalg import as_vector, hard_threshold, sign_resolved_error
from .sensing import empirical_risk


@dataclass(frozen=True, eq=False)
class LinearizedSystem:
    rows: np.ndarray
    rhs: np.ndarray

    def loss(self, x):
        r = self.rows @ x - self.rhs
        return float(r @ r)


@dataclass
class RecoveryTrace:
    iterates: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    risks: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = "max_iter"

    def record(self, x, instance):
        self.iterates.append(x)
        self.errors.append(sign_resolved_error(x, instance.x0))
        self.risks.append(empirical_risk(instance, x))

    @property
    def final_error(self):
        return self.errors[-1] if self.errors else math.nan

    @property
    def iterations(self):
        return max(len(self.iterates) - 1, 0)


def linearize(instance, y):
    y = as_vector(y)
    if abs(np.linalg.norm(y) - 1.0) > 1e-12:
        raise InvalidArgument("linearization point must have unit norm")
    scale = 1.0 / math.sqrt(instance.m)
    rows = instance.ensemble.left_products(y) * scale
    return LinearizedSystem(rows, instance.b * scale)


def iht(system, k, L, x_start=None):
    """L iterations of x <- H_k(x + Phi^T (rhs - Phi x)), unit step."""
    if L < 1:
        raise InvalidArgument("L must be >= 1")
    Phi, rhs = system.rows, system.rhs
    x = np.zeros(Phi.shape[1]) if x_start is None else hard_threshold(x_start, k)
    for _ in range(L):
        x = hard_threshold(x + Phi.T @ (rhs - Phi @ x), k)
    return x


def angle_sin(u, v):
    """|sin| of the angle between two unit vectors.

    Taken as the norm of u minus its projection on v; sqrt(1 - cos^2) cannot
    resolve angles below about 1.5e-8.
    """
    return min(float(np.linalg.norm(u - (u @ v) * v)), 1.0)


def spf_run(instance, x_init, T=50, L=25, tol=1e-10, k=None):
    x_init = as_vector(x_init)
    nrm = np.linalg.norm(x_init)
    if nrm == 0:
        raise InvalidArgument("initial point must be nonzero")
    k = instance.k if k is None else k
    x = x_init / nrm
    trace = RecoveryTrace()
    trace.record(x, instance)
    for _ in range(T):
        z = iht(linearize(instance, x), k, L, x_start=x)
        nz = np.linalg.norm(z)
        if nz == 0:
            trace.stop_reason = "degenerate_iterate"
            raise DegenerateIterate("IHT returned the zero vector", trace=trace)
        x_new = z / nz
        trace.record(x_new, instance)
        moved = angle_sin(x_new, x)
        x = x_new
        if moved < tol:
            trace.converged = True
            trace.stop_reason = "converged"
            break
    return trace
