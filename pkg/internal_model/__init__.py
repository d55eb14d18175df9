"""
Internal model package.
Jordan internal models, p-copy / G-condition checks and regulation certificates.
"""

from internal_model.builders import InternalModelSpec, build_jordan_internal_model, retune_frequency
from internal_model.conditions import (
    GConditionsReport, PCopyReport, FeedbackInvarianceResult, DiagonalStabilityResult,
    check_g_conditions, check_p_copy, check_feedback_invariance, check_diagonal_stability,
)
from internal_model.certificate import (
    RorpCertificate, ClassCertificate, certify_rorp, certify_class, regulation_residual,
)

__all__ = [
    "InternalModelSpec", "build_jordan_internal_model", "retune_frequency",
    "GConditionsReport", "PCopyReport", "FeedbackInvarianceResult", "DiagonalStabilityResult",
    "check_g_conditions", "check_p_copy", "check_feedback_invariance", "check_diagonal_stability",
    "RorpCertificate", "ClassCertificate", "certify_rorp", "certify_class",
    "regulation_residual",
]
