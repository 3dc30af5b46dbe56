"""Numerics for L-functions of level-1 Hecke eigenforms and their derivatives."""

__version__ = "0.1.0"

from .forms import (CuspForm, FormError, build_eigenform, lambda_coeff,
                    satake_params, verify_hecke)
from .special import (PrecisionPolicy, SpecialFunctionError, digamma, log_gamma,
                      polygamma, upper_incomplete_gamma)
from .chifactor import (ChiContext, ContourSpec, DomainError, QuadratureError,
                        chi, chi_asymptotic, chi_derivative, chi_log_deriv_ratio,
                        gamma_j, gamma_j_residues)
from .smoothing import (SmoothingFunction, SmoothingError, k_phi, make_phi,
                        make_psi_alpha, make_smoothstep, phi_deriv, phi_norm)
from .lseries import (EvalRequest, EvalResult, EvaluationError, afe_sharp,
                      afe_smoothed, dirichlet_eval, evaluate,
                      functional_eq_residual, oracle_derivative, oracle_eval)
from .meanvalue import (MomentReport, QuadSpec, RankinEstimate, a_fm,
                        a_fm_fraction, moment_report, rankin_constant,
                        second_moment, tail_sum)

__all__ = [name for name in dir() if not name.startswith("_")]
