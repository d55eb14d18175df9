"""
Stabilizing Gains
=================
LQR state feedback and its dual output injection, both from care_solve.

Usage:
    K = lqr_gain(A, B)                 # A + B K Hurwitz
    L = output_injection_gain(A, C)    # A + L C Hurwitz
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg as sla

from numerics.equations import care_solve, uncontrollable_modes
from numerics.errors import SynthesisError, UndetectableError, UnstabilizableError
from numerics.linalg import as_matrix, spectral_abscissa

logger = logging.getLogger(__name__)


def lqr_gain(A, B, Q: Optional[np.ndarray] = None, R: Optional[np.ndarray] = None) -> np.ndarray:
    """
    K = -R^-1 B* P with P the stabilizing CARE solution.

    Args:
        A: n x n state matrix.
        B: n x m input matrix.
        Q: State weight (identity when omitted).
        R: Input weight (identity when omitted).

    Returns:
        m x n gain with A + B K Hurwitz.

    Raises:
        UnstabilizableError: With the PBH-failing eigenvalues when (A, B) is
            not stabilizable.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n, m = B.shape
    Q = np.eye(n) if Q is None else as_matrix(Q, "Q")
    R = np.eye(m) if R is None else as_matrix(R, "R")

    modes = uncontrollable_modes(A, B)
    if modes:
        listed = ", ".join(f"{lam.real:.4g}{lam.imag:+.4g}j" for lam in modes)
        raise UnstabilizableError(
            f"(A, B) is not stabilizable: uncontrollable modes at {listed}", modes
        )

    try:
        P = care_solve(A, B, Q, R)
    except SynthesisError as exc:
        raise UnstabilizableError(f"LQR synthesis failed: {exc}") from exc

    K = -sla.solve(R, B.conj().T @ P, assume_a="her")
    abscissa = spectral_abscissa(A + B @ K)
    if abscissa >= 0:
        raise UnstabilizableError(f"LQR gain does not stabilize (abscissa {abscissa:.3e})")
    logger.debug(f"LQR gain {K.shape}: closed-loop abscissa {abscissa:.4e} (margin {-abscissa:.4e})")
    return K


def output_injection_gain(A, C, Q: Optional[np.ndarray] = None, R: Optional[np.ndarray] = None) -> np.ndarray:
    """
    L = (lqr_gain(A*, C*))* so that A + L C is Hurwitz.

    Raises:
        UndetectableError: With the unobservable eigenvalues when (C, A) is
            not detectable.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    try:
        K_dual = lqr_gain(A.conj().T, C.conj().T, Q, R)
    except UnstabilizableError as exc:
        modes = [complex(np.conj(lam)) for lam in exc.modes]
        raise UndetectableError(
            f"(C, A) is not detectable: {exc}".replace("uncontrollable", "unobservable"), modes
        ) from exc
    return K_dual.conj().T
