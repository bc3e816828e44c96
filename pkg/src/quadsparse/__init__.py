"""Sparse recovery from random quadratic measurements.

Instance generation, spectral initialization, sparse power factorization,
truncated gradient descent, phase-retrieval initialization and a brute-force
explorer for the overlap landscape of the binary problem.
"""

from .errors import (BudgetExceeded, ConvergenceError, DegenerateInstance, DegenerateIterate,
                     DegenerateSupport, DivergenceError, FormatError, InvalidArgument,
                     QuadSparseError)
from .init_quadratic import InitEstimate, initialize
from .io import load_instance, save_instance
from .linalg import hard_threshold, sign_resolved_error, soft_threshold, top_eigpair
from .ogp import (chi2_tail_validate, critical_overlap, enumerate_phi, gamma_curve,
                  informative_range, ogp_witness, overlap_count, phi_profile)
from .pr_init import generate_pr_instance, pr_initialize
from .sensing import (SensingEnsemble, empirical_risk, generate_binary_instance,
                      generate_instance, risk_gradient)
from .spf import spf_run
from .tgd import TGDConfig, tgd_run

__version__ = "0.1.0"
