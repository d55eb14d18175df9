"""
Numerics package for the robust regulator toolkit.
Dense eigen/SVD/rank kernels, matrix exponential, Sylvester and Riccati solvers.
"""

from numerics.linalg import (
    RankTolerance, RankInfo, as_matrix, eig, eigvals, svd_rank, matrix_rank,
    pinv, expm, spectral_abscissa, is_hurwitz,
)
from numerics.equations import (
    sylvester_generic, sylvester_kronecker, sylvester_residual, care_solve,
    uncontrollable_modes,
)

__all__ = [
    "RankTolerance", "RankInfo", "as_matrix", "eig", "eigvals", "svd_rank",
    "matrix_rank", "pinv", "expm", "spectral_abscissa", "is_hurwitz",
    "sylvester_generic", "sylvester_kronecker", "sylvester_residual",
    "care_solve", "uncontrollable_modes",
]
