"""Carleman weight, conjugated operators and quadrature-verified estimates."""
from .estimates import (EstimateError, EstimateReport, beta_fit, b_psi, carleman_sides,
                        carleman_sides_multi, carleman_sweep, energy_check_char, energy_check_T,
                        ibp_identity_check, j_terms, summarize_sweep)
from .operators import (ConjugationOverflow, Derivs, LogField, apply_P, apply_Ps_minus, apply_Ps_plus,
                        conjugate, conjugation_residual, deconjugate, random_points_Q)
from .quadrature import AnalyticRules
from .testfunc import TestFunction, constant_function, default_box, random_suite, random_test_function
from .weight import (CarlemanWeight, GeometryResult, HSDecay, WeightError, eval_weight, geometry_check,
                     h_s_decay, hs_integral, laplace_estimate, psi, psi_gradient)

__all__ = [
    "EstimateError", "EstimateReport", "beta_fit", "b_psi", "carleman_sides", "carleman_sides_multi",
    "carleman_sweep", "energy_check_char", "energy_check_T", "ibp_identity_check", "j_terms",
    "summarize_sweep", "ConjugationOverflow", "Derivs", "LogField", "apply_P", "apply_Ps_minus",
    "apply_Ps_plus", "conjugate", "conjugation_residual", "deconjugate", "random_points_Q", "AnalyticRules",
    "TestFunction", "constant_function", "default_box", "random_suite", "random_test_function",
    "CarlemanWeight", "GeometryResult", "HSDecay", "WeightError", "eval_weight", "geometry_check",
    "h_s_decay", "hs_integral", "laplace_estimate", "psi", "psi_gradient",
]
