"""
Matrix Equation Solvers
=======================
Sylvester and continuous algebraic Riccati solvers.

    sylvester_generic(A, B, C)    X B - A X = C       (Bartels-Stewart via SciPy)
    sylvester_kronecker(A, B, C)  same equation, dense Kronecker solve (oracle)
    care_solve(A, B, Q, R)        A*P + P A - P B R^-1 B* P + Q = 0

The Riccati solution is read off the stable invariant subspace of the
Hamiltonian matrix, obtained from an ordered complex Schur form.
"""

import logging
from typing import List

import numpy as np
import scipy.linalg as sla

from numerics.errors import (
    DimensionError,
    NumericalError,
    SingularityError,
    SynthesisError,
)
from numerics.linalg import (
    RankTolerance,
    as_matrix,
    eigvals,
    matrix_norm,
    matrix_rank,
    spectral_abscissa,
)

logger = logging.getLogger(__name__)

# Minimum eigenvalue separation, relative to ||A|| + ||B|| + 1
SPECTRAL_SEPARATION = 1e-10

# Relative Riccati residual: warn above the first, reject above the second
CARE_RESIDUAL_WARNING = 1e-8
CARE_RESIDUAL_CEILING = 1e-6


def _check_sylvester_shapes(A: np.ndarray, B: np.ndarray, C: np.ndarray) -> None:
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"A must be square, got shape {A.shape}")
    if B.shape[0] != B.shape[1]:
        raise DimensionError(f"B must be square, got shape {B.shape}")
    if C.shape != (A.shape[0], B.shape[0]):
        raise DimensionError(
            f"C must be {A.shape[0]}x{B.shape[0]}, got shape {C.shape}"
        )


def spectral_separation(A, B) -> float:
    """Smallest distance between an eigenvalue of A and one of B."""
    a = eigvals(A)
    b = eigvals(B)
    if a.size == 0 or b.size == 0:
        return float("inf")
    return float(np.min(np.abs(a[:, None] - b[None, :])))


def sylvester_generic(A, B, C) -> np.ndarray:
    """
    Solve X B - A X = C.

    Args:
        A: n x n matrix.
        B: k x k matrix.
        C: n x k right-hand side.

    Returns:
        The unique n x k solution X.

    Raises:
        SingularityError: If A and B share an eigenvalue.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    _check_sylvester_shapes(A, B, C)

    scale = matrix_norm(A) + matrix_norm(B) + 1.0
    separation = spectral_separation(A, B)
    if separation <= SPECTRAL_SEPARATION * scale:
        raise SingularityError(
            f"Sylvester equation is singular: spectra of A and B are "
            f"{separation:.3e} apart"
        )

    # solve_sylvester handles a X + X b = q; here a = -A, b = B.
    try:
        X = sla.solve_sylvester(-A, B, C)
    except (sla.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Sylvester solve failed: {exc}") from exc
    return X


def sylvester_kronecker(A, B, C) -> np.ndarray:
    """
    Solve X B - A X = C by vectorization.

    vec(X B - A X) = (B^T kron I - I kron A) vec(X), column-major vec.
    Only suitable for small problems.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    C = as_matrix(C, "C")
    _check_sylvester_shapes(A, B, C)
    n, k = C.shape
    M = np.kron(B.T, np.eye(n)) - np.kron(np.eye(k), A)
    try:
        x = sla.solve(M, C.reshape(-1, order="F"))
    except sla.LinAlgError as exc:
        raise SingularityError(f"Kronecker system is singular: {exc}") from exc
    return x.reshape((n, k), order="F")


def sylvester_residual(X, A, B, C) -> float:
    """Relative residual ||X B - A X - C|| / ((||A|| + ||B||) ||X|| + ||C||)."""
    X = np.asarray(X)
    res = X @ B - A @ X - C
    denom = (matrix_norm(A) + matrix_norm(B)) * matrix_norm(X) + matrix_norm(C)
    if denom == 0.0:
        return matrix_norm(res)
    return matrix_norm(res) / denom


def uncontrollable_modes(A, B, tol: RankTolerance = RankTolerance()) -> List[complex]:
    """
    PBH test: eigenvalues lambda of A with Re(lambda) >= 0 and
    rank([lambda I - A, B]) < n.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0]
    modes = []
    for lam in eigvals(A):
        if lam.real < 0:
            continue
        pencil = np.hstack([lam * np.eye(n) - A, B])
        if matrix_rank(pencil, tol) < n:
            modes.append(complex(lam))
    return modes


def care_solve(A, B, Q, R) -> np.ndarray:
    """
    Stabilizing solution of the continuous algebraic Riccati equation.

        A* P + P A - P B R^-1 B* P + Q = 0

    Args:
        A: n x n state matrix.
        B: n x m input matrix.
        Q: n x n Hermitian positive semidefinite weight.
        R: m x m Hermitian positive definite weight.

    Returns:
        Hermitian P with A - B R^-1 B* P Hurwitz. Real when the data is real.

    Raises:
        SynthesisError: If the Hamiltonian has eigenvalues on the imaginary
            axis (data not stabilizable/detectable) or the subspace basis
            is singular.
        NumericalError: If the relative residual exceeds CARE_RESIDUAL_CEILING.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    Q = as_matrix(Q, "Q")
    R = as_matrix(R, "R")
    n = A.shape[0]
    m = B.shape[1]
    if A.shape != (n, n) or B.shape[0] != n:
        raise DimensionError(f"A {A.shape} and B {B.shape} are incompatible")
    if Q.shape != (n, n) or R.shape != (m, m):
        raise DimensionError(f"weights Q {Q.shape} / R {R.shape} have wrong size")
    if n == 0:
        return np.zeros((0, 0))

    real_data = not any(np.iscomplexobj(M) for M in (A, B, Q, R))

    try:
        R_inv_Bh = sla.solve(R, B.conj().T, assume_a="her")
    except sla.LinAlgError as exc:
        raise SynthesisError(f"R is not positive definite: {exc}") from exc
    G = B @ R_inv_Bh

    H = np.block([[A, -G], [-Q, -A.conj().T]]).astype(complex)
    try:
        _, Z, sdim = sla.schur(H, output="complex", sort="lhp")
    except sla.LinAlgError as exc:
        raise NumericalError(f"Hamiltonian Schur form failed: {exc}") from exc

    if sdim != n:
        raise SynthesisError(
            f"Hamiltonian has {2 * n - sdim} eigenvalues outside the open left "
            f"half-plane (expected {n}); data is not stabilizable/detectable"
        )

    U1 = Z[:n, :n]
    U2 = Z[n:, :n]
    if matrix_rank(U1) < n:
        raise SynthesisError("stable invariant subspace is not a graph; no stabilizing P")
    P = sla.solve(U1.T, U2.T).T
    P = 0.5 * (P + P.conj().T)
    if real_data:
        P = P.real

    closed_loop = A - G @ P
    abscissa = spectral_abscissa(closed_loop)
    if abscissa >= 0:
        raise SynthesisError(
            f"Riccati closed loop is not Hurwitz (abscissa {abscissa:.3e})"
        )

    residual = A.conj().T @ P + P @ A - P @ G @ P + Q
    scale = max(1.0, matrix_norm(Q) + 2 * matrix_norm(A) * matrix_norm(P)
                + matrix_norm(G) * matrix_norm(P) ** 2)
    rel = matrix_norm(residual) / scale
    logger.debug(f"CARE solved: n={n}, relative residual {rel:.2e}, abscissa {abscissa:.3e}")
    if rel > CARE_RESIDUAL_CEILING:
        raise NumericalError(
            f"CARE relative residual {rel:.2e} exceeds {CARE_RESIDUAL_CEILING:.0e}"
        )
    if rel > CARE_RESIDUAL_WARNING:
        logger.warning(f"CARE residual {rel:.2e} exceeds {CARE_RESIDUAL_WARNING:.0e}")
    return P
