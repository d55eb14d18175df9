"""
Dense Linear Algebra Kernels
============================
Thin, validated wrappers around scipy.linalg used by every other package:
eigendecomposition, SVD-based numerical rank, Moore-Penrose pseudoinverse,
matrix exponential and spectral abscissa.

Usage:
    from numerics.linalg import svd_rank, pinv, RankTolerance

    info = svd_rank(M, RankTolerance(1e-9))
    print(info.rank, info.null_basis.shape)
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import scipy.linalg as sla

from numerics.errors import DimensionError, NumericalError, SingularityError

logger = logging.getLogger(__name__)

DEFAULT_RANK_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RankTolerance:
    """Relative singular-value threshold used for every rank decision."""

    relative_threshold: float = DEFAULT_RANK_TOLERANCE

    def __post_init__(self):
        if not 0.0 <= self.relative_threshold < 1.0:
            raise ValueError(
                f"relative_threshold must lie in [0, 1), got {self.relative_threshold}"
            )


@dataclass(frozen=True)
class RankInfo:
    """
    Result of svd_rank.

    Attributes:
        rank: Number of singular values above the threshold.
        singular_values: All singular values, descending.
        null_basis: Orthonormal columns spanning the numerical kernel.
        range_basis: Orthonormal columns spanning the numerical range.
        gap: Ratio sigma_{rank+1} / sigma_rank (0 when nothing is discarded),
            small values mean a clear-cut decision.
    """

    rank: int
    singular_values: np.ndarray
    null_basis: np.ndarray
    range_basis: np.ndarray
    gap: float


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """
    Convert input to a 2-D numpy array and check entries are finite.

    Real input stays real; complex input stays complex.
    """
    arr = np.asarray(M)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.iscomplexobj(arr):
        arr = arr.astype(float)
    else:
        arr = arr.astype(complex)
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains NaN or Inf entries")
    return arr


def _require_square(M: np.ndarray, name: str) -> None:
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")


def eig(M) -> List[Tuple[complex, np.ndarray]]:
    """
    Eigenpairs of a square matrix, with algebraic multiplicity.

    Returns:
        List of (eigenvalue, unit eigenvector) tuples.

    Raises:
        DimensionError: If M is not square.
        NumericalError: If the QR iteration does not converge.
    """
    M = as_matrix(M, "M")
    _require_square(M, "M")
    if M.shape[0] == 0:
        return []
    try:
        values, vectors = sla.eig(M)
    except sla.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    return [(complex(values[i]), vectors[:, i]) for i in range(len(values))]


def eigvals(M) -> np.ndarray:
    """Eigenvalues only (cheaper than eig)."""
    M = as_matrix(M, "M")
    _require_square(M, "M")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        return sla.eigvals(M)
    except sla.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc


def spectral_abscissa(M) -> float:
    """Largest real part over the spectrum of M (-inf for an empty matrix)."""
    values = eigvals(M)
    if values.size == 0:
        return float("-inf")
    return float(np.max(values.real))


def is_hurwitz(M, margin: float = 0.0) -> bool:
    """True when every eigenvalue has real part below -margin."""
    return spectral_abscissa(M) < -margin


def svd_rank(M, tol: RankTolerance = RankTolerance()) -> RankInfo:
    """
    Numerical rank with orthonormal kernel and range bases.

    rank = #{sigma_i > tol * sigma_1}. A zero matrix has rank 0.
    """
    M = as_matrix(M, "M")
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return RankInfo(
            rank=0,
            singular_values=np.zeros(0),
            null_basis=np.eye(cols, dtype=M.dtype),
            range_basis=np.zeros((rows, 0), dtype=M.dtype),
            gap=0.0,
        )
    try:
        U, s, Vh = sla.svd(M, full_matrices=True)
    except sla.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc

    threshold = tol.relative_threshold * s[0] if s.size else 0.0
    rank = int(np.sum(s > threshold))
    if rank == 0 or rank == s.size:
        gap = 0.0
    else:
        gap = float(s[rank] / s[rank - 1])

    null_basis = Vh[rank:, :].conj().T
    range_basis = U[:, :rank]
    return RankInfo(rank=rank, singular_values=s, null_basis=null_basis,
                    range_basis=range_basis, gap=gap)


def matrix_rank(M, tol: RankTolerance = RankTolerance()) -> int:
    """Shorthand for svd_rank(M, tol).rank."""
    return svd_rank(M, tol).rank


def pinv(M, tol: RankTolerance = RankTolerance()) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse via the thin SVD.

    Singular values at or below tol * sigma_1 are treated as zero, so an
    invertible matrix yields its ordinary inverse.
    """
    M = as_matrix(M, "M")
    rows, cols = M.shape
    if rows == 0 or cols == 0:
        return np.zeros((cols, rows), dtype=M.dtype)
    try:
        U, s, Vh = sla.svd(M, full_matrices=False)
    except sla.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc
    cutoff = tol.relative_threshold * s[0]
    s_inv = np.zeros_like(s)
    keep = s > cutoff
    s_inv[keep] = 1.0 / s[keep]
    return (Vh.conj().T * s_inv) @ U.conj().T


def expm(M) -> np.ndarray:
    """
    Matrix exponential (scaling and squaring with Pade approximant).

    Raises:
        NumericalError: If the result overflows.
    """
    M = as_matrix(M, "M")
    _require_square(M, "M")
    with np.errstate(over="ignore", invalid="ignore"):
        result = sla.expm(M)
    if not np.all(np.isfinite(result)):
        raise NumericalError(
            f"matrix exponential overflowed (norm {np.linalg.norm(M):.3e})"
        )
    return result


def solve(M, rhs) -> np.ndarray:
    """LU solve of M X = rhs with a singularity check."""
    M = as_matrix(M, "M")
    _require_square(M, "M")
    try:
        return sla.solve(M, rhs)
    except sla.LinAlgError as exc:
        raise SingularityError(f"linear solve failed: {exc}") from exc


def block_diag(*blocks) -> np.ndarray:
    """Block-diagonal assembly; promotes to complex when any block is."""
    if not blocks:
        return np.zeros((0, 0))
    return sla.block_diag(*blocks)


def matrix_norm(M) -> float:
    """Spectral norm, 0 for empty matrices."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))
