"""Truncated gradient descent on the empirical quadratic risk.

x+ = soft_threshold(x - eta * grad R(x), eta * tau(x)) where tau(x) scales
with the current residual norm and ||x||, so the truncation level shrinks as
the iterate approaches the signal.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import DivergenceError, InvalidArgument
from .linalg import as_vector, sign_resolved_error, soft_threshold
from .sensing import empirical_risk, risk_and_gradient
from .spf import RecoveryTrace

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class TGDConfig:
    eta: float = 0.04
    C_tau: float = 2.0
    T_max: int = 1000
    tol: float = 1e-12
    track_errors: bool = True

    def __post_init__(self):
        if not 0 < self.eta < 1 / 20:
            raise InvalidArgument("eta must lie in (0, 1/20)")
        if self.C_tau <= 0:
            raise InvalidArgument("C_tau must be positive")
        if self.T_max < 0:
            raise InvalidArgument("T_max must be non-negative")


def tau_from_residuals(res, x, m, n, C_tau):
    return math.sqrt(C_tau * math.log(m * n) / m**2 * float(res @ res) * float(x @ x))


def tau(instance, x, C_tau=2.0):
    """Truncation level sqrt(C log(mn)/m^2 * sum_i r_i(x)^2 * ||x||^2)."""
    x = as_vector(x)
    res = instance.ensemble.quad_forms(x) - instance.b
    return tau_from_residuals(res, x, instance.m, instance.n, C_tau)


def _step(instance, x, eta, C_tau):
    risk, grad, res = risk_and_gradient(instance, x)
    level = eta * tau_from_residuals(res, x, instance.m, instance.n, C_tau)
    return soft_threshold(x - eta * grad, level), risk


def tgd_step(instance, x, config):
    # eta = 0 is allowed here (identity step) even though TGDConfig forbids it
    x = as_vector(x)
    return _step(instance, x, config.eta, config.C_tau)[0]


def tgd_run(instance, x_init, config=TGDConfig()):
    """Iterate tgd steps until ||x+ - x|| < tol or T_max steps.

    The risk of each iterate is taken from the gradient evaluation of the
    following step, so every iterate costs one pass over the data.
    """
    x = as_vector(x_init).copy()
    trace = RecoveryTrace()
    risk0 = None
    for _ in range(config.T_max):
        x_new, risk = _step(instance, x, config.eta, config.C_tau)
        trace.iterates.append(x)
        trace.risks.append(risk)
        if config.track_errors:
            trace.errors.append(sign_resolved_error(x, instance.x0))
        if risk0 is None:
            risk0 = max(risk, 1e-300)
        elif not math.isfinite(risk) or risk > DIVERGENCE_FACTOR * risk0:
            trace.stop_reason = "diverged"
            raise DivergenceError("risk exceeded the divergence guard", trace=trace)
        moved = np.linalg.norm(x_new - x)
        x = x_new
        if moved < config.tol:
            trace.converged = True
            trace.stop_reason = "converged"
            break
    trace.iterates.append(x)
    trace.risks.append(empirical_risk(instance, x))
    if config.track_errors:
        trace.errors.append(sign_resolved_error(x, instance.x0))
    return trace
