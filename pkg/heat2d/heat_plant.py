"""
2D Heat Benchmark
=================
Spectral Galerkin model of the heat equation on the unit square with
Neumann boundary control on two half-edges and averaged boundary
observation on the same half-edges.

    x_t = Laplace x,  dx/dn = 0 on the boundary except
    dx/dn = u1 on {xi2 = 0, 0 <= xi1 <= 1/2}
    dx/dn = u2 on {xi2 = 1, 1/2 <= xi1 <= 1}
    y1 = 2 int_0^1/2 x(xi1, 0) dxi1,  y2 = 2 int_1/2^1 x(xi1, 1) dxi1

The state holds the coefficients of the cosine eigenfunctions
phi_mn = c_m c_n cos(m pi xi1) cos(n pi xi2), c_0 = 1, c_m = sqrt(2),
with mode (m, n) stored at index m * N + n. All boundary integrals are
closed form.

Usage:
    heat = build_heat_plant(HeatModelConfig(modes=10, kappa=1.0))
    exo = benchmark_exosystem(heat.stabilized.n)
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd

from controllers.minimal import prestabilize_output_feedback
from numerics.errors import ValidationError
from numerics.linalg import matrix_norm, spectral_abscissa
from sysmodel.state_space import Exosystem, StateSpace, exosystem_from_frequencies, transfer_eval

logger = logging.getLogger(__name__)

BENCHMARK_FREQUENCIES = [-np.pi, 0.0, np.pi]
BENCHMARK_V0 = np.array([1.0, 1.0, 1.0])

# sin(m pi / 2) for m mod 4
_HALF_SINE = (0.0, 1.0, 0.0, -1.0)


@dataclass(frozen=True)
class HeatModelConfig:
    """Truncation order (modes per axis) and output feedback gain."""

    modes: int = 10
    kappa: float = 1.0

    def __post_init__(self):
        if int(self.modes) != self.modes or self.modes < 1:
            raise ValidationError(f"modes must be a positive integer, got {self.modes}")
        if self.kappa < 0:
            raise ValidationError(f"kappa must be non-negative, got {self.kappa}")


@dataclass
class HeatPlant:
    stabilized: StateSpace
    raw: StateSpace
    config: HeatModelConfig


def _normalization(modes: int) -> np.ndarray:
    c = np.full(modes, np.sqrt(2.0))
    c[0] = 1.0
    return c


def _half_integrals(modes: int) -> Tuple[np.ndarray, np.ndarray]:
    """int_0^1/2 cos(m pi s) ds and int_1/2^1 cos(m pi s) ds for m < modes."""
    lower = np.empty(modes)
    lower[0] = 0.5
    for m in range(1, modes):
        lower[m] = _HALF_SINE[m % 4] / (m * np.pi)
    upper = -lower.copy()
    upper[0] = 0.5
    return lower, upper


def build_heat_plant(config: HeatModelConfig = HeatModelConfig()) -> HeatPlant:
    """
    Galerkin matrices of the benchmark, raw and closed under u = -kappa y + u_new.

    Returns:
        HeatPlant with the raw model (A has a zero eigenvalue) and the
        pre-stabilized model.
    """
    N = int(config.modes)
    c = _normalization(N)
    lower, upper = _half_integrals(N)
    m_idx, n_idx = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    m_idx, n_idx = m_idx.ravel(), n_idx.ravel()

    A = np.diag(-(m_idx ** 2 + n_idx ** 2) * np.pi ** 2).astype(float)
    B = np.zeros((N * N, 2))
    B[:, 0] = c[m_idx] * c[n_idx] * lower[m_idx]
    B[:, 1] = c[m_idx] * c[n_idx] * (-1.0) ** n_idx * upper[m_idx]
    C = 2.0 * B.T
    D = np.zeros((2, 2))

    labels = [f"mode({m},{n})" for m, n in zip(m_idx, n_idx)]
    raw = StateSpace(A=A, B=B, C=C, D=D, state_labels=labels,
                     input_labels=["u1", "u2"], output_labels=["y1", "y2"])
    stabilized = prestabilize_output_feedback(raw, config.kappa)
    logger.info(
        f"Heat plant: {N}x{N} modes, kappa={config.kappa}, "
        f"abscissa {spectral_abscissa(stabilized.A):.4e}"
    )
    return HeatPlant(stabilized=stabilized, raw=raw, config=config)


def benchmark_exosystem(n_states: int) -> Exosystem:
    """
    S = diag(-i pi, 0, i pi), E = 0, F = [[0, 1, 0], [-1/2, 0, -1/2]].

    With v0 = (1, 1, 1) the reference -F e^{St} v0 is (-1, cos pi t).
    """
    F = np.array([[0.0, 1.0, 0.0], [-0.5, 0.0, -0.5]])
    return exosystem_from_frequencies(
        BENCHMARK_FREQUENCIES, [1, 1, 1], E=np.zeros((n_states, 3)), F=F
    )


def benchmark_reference(t) -> np.ndarray:
    """(-1, cos pi t), rows are outputs."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return np.vstack([-np.ones_like(t), np.cos(np.pi * t)])


def temperature_field(x, modes: int, grid: int = 41) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Evaluate sum_mn x_mn phi_mn on a grid x grid mesh of the unit square.

    Returns:
        (xi1, xi2, T) with T[i, j] the temperature at (xi1[i], xi2[j]).
    """
    x = np.asarray(x)
    if x.shape != (modes * modes,):
        raise ValidationError(f"state must have {modes * modes} entries, got shape {x.shape}")
    xi = np.linspace(0.0, 1.0, grid)
    basis = _normalization(modes)[:, None] * np.cos(np.pi * np.outer(np.arange(modes), xi))
    T = basis.T @ x.reshape(modes, modes) @ basis
    return xi, xi.copy(), T


def transfer_convergence(
    modes: int,
    modes_check: int,
    frequencies: Sequence[float] = BENCHMARK_FREQUENCIES,
    kappa: float = 1.0,
) -> pd.DataFrame:
    """Compare P(i w) of the stabilized model at two truncation orders."""
    coarse = build_heat_plant(HeatModelConfig(modes, kappa)).stabilized
    fine = build_heat_plant(HeatModelConfig(modes_check, kappa)).stabilized
    rows = []
    for k, w in enumerate(frequencies):
        P_coarse = transfer_eval(coarse, 1j * w, frequency_index=k)
        P_fine = transfer_eval(fine, 1j * w, frequency_index=k)
        rows.append({
            "frequency": float(w),
            "modes": modes,
            "modes_check": modes_check,
            "norm_P": matrix_norm(P_coarse),
            "norm_P_check": matrix_norm(P_fine),
            "difference": matrix_norm(P_coarse - P_fine),
        })
    return pd.DataFrame(rows)
