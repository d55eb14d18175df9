"""
Controllers package.
Synthesis of error-feedback controllers that solve the robust output
regulation problem: minimal-order, triangular and observer-based families.
"""

from controllers.controller_factory import create_controller
from controllers.minimal import (
    minimal_controller,
    minimal_controller_real,
    prestabilize_output_feedback,
    real_form_counterpart,
    tune_epsilon,
)
from controllers.observer import observer_controller, observer_controller_diag
from controllers.reduced import reduced_order_minimal_controller
from controllers.stabilize import lqr_gain, output_injection_gain
from controllers.triangular import (
    triangular_controller,
    triangular_controller_diag,
    triangular_controller_reduced,
)

__all__ = [
    "create_controller",
    "minimal_controller",
    "minimal_controller_real",
    "prestabilize_output_feedback",
    "real_form_counterpart",
    "tune_epsilon",
    "observer_controller",
    "observer_controller_diag",
    "reduced_order_minimal_controller",
    "lqr_gain",
    "output_injection_gain",
    "triangular_controller",
    "triangular_controller_diag",
    "triangular_controller_reduced",
]
