"""
Observer-Based Controller
=========================
Controller on Z = Z0 x X for square plants (m = p):

    G1_c = [[G1, 0], [(B + L D) K1, A + B K2 + L (C + D K2)]]
    G2_c = [[G2], [-L]]
    K_c  = [K1, K2]

G1 is the Jordan internal model and G2 feeds the error into the last block
of every chain. H solves

    G1 H = H (A + B K21) + G2 (C + D K21),

B1 = H B + G2 D, K1 stabilizes (G1, B1) and K2 = K21 + K1 H.

The diagonal variant uses K1 = -B1* directly.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from controllers.minimal import require_diagonal, surjective_transfer
from controllers.stabilize import lqr_gain, output_injection_gain
from controllers.triangular import TriangularForm, block_triangular_form
from internal_model.builders import InternalModelSpec, build_jordan_internal_model
from internal_model.conditions import check_diagonal_stability
from numerics.equations import sylvester_residual
from numerics.errors import (
    DimensionError,
    NumericalError,
    NumericalRankAlert,
    PreconditionError,
    ShapeError,
    UnstabilizableError,
)
from numerics.linalg import RankTolerance, matrix_norm, matrix_rank, spectral_abscissa
from sysmodel.serialization import matrix_to_json
from sysmodel.state_space import (
    ClosedLoop,
    Controller,
    Exosystem,
    Resolvent,
    StateSpace,
    transfer_eval,
)

logger = logging.getLogger(__name__)

G2Choice = Union[str, Sequence[np.ndarray], np.ndarray, None]

# Relative gap allowed between -B1* and the exact -I of the inverse-transfer choice
IDENTITY_TOLERANCE = 1e-8


@dataclass
class ObserverSynthesisRecord:
    """Intermediate operators of an observer-based synthesis."""

    H: np.ndarray
    B1: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K21: np.ndarray
    L: np.ndarray
    G2: np.ndarray
    G1: np.ndarray
    residual: float = 0.0
    variant: str = "observer"
    # ||-B1* + I||, diagonal variant with G2 = P_K^-1 only
    identity_gap: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            name: matrix_to_json(getattr(self, name))
            for name in ("H", "B1", "K1", "K2", "K21", "L", "G2", "G1")
        }
        data["sylvester_residual"] = self.residual
        data["variant"] = self.variant
        data["identity_gap"] = self.identity_gap
        return data


def sylvester_structured_6(A_K, C_K, G2, exo: Exosystem) -> np.ndarray:
    """
    Solve G1 H = H A_K + G2 C_K for the Jordan internal model G1 of `exo`.

        H_k^l = sum_{j=l..n_k} (-1)^{j-l} G2^{kj} C_K R(i w_k, A_K)^{j+1-l}

    Raises:
        ResolventSingularityError: If i w_k is an eigenvalue of A_K.
    """
    A_K = np.asarray(A_K)
    C_K = np.asarray(C_K)
    G2 = np.asarray(G2)
    n = A_K.shape[0]
    p = C_K.shape[0]
    if G2.shape != (p * sum(exo.jordan_sizes), p):
        raise DimensionError(
            f"G2 must be {p * sum(exo.jordan_sizes)}x{p}, got {G2.shape[0]}x{G2.shape[1]}"
        )
    H = np.zeros((G2.shape[0], n), dtype=complex)

    row = 0
    for k, (w, nk) in enumerate(zip(exo.frequencies, exo.jordan_sizes)):
        R = Resolvent(A_K, 1j * w, frequency_index=k)
        # left_powers[s-1] = C_K R^s
        left_powers, current = [], C_K.astype(complex)
        for _ in range(nk):
            current = R.solve_left(current)
            left_powers.append(current)
        chain = [G2[row + j * p: row + (j + 1) * p, :] for j in range(nk)]
        for l in range(1, nk + 1):
            block = np.zeros((p, n), dtype=complex)
            for j in range(l, nk + 1):
                block += (-1) ** (j - l) * chain[j - 1] @ left_powers[j - l]
            H[row + (l - 1) * p: row + l * p, :] = block
        row += nk * p
    return H


def default_g2(spec: InternalModelSpec) -> np.ndarray:
    """G2 with the identity in the last block of every chain, zeros elsewhere."""
    p = spec.output_dim
    G2 = np.zeros((spec.dimension, p), dtype=complex)
    for offset, nk in zip(spec.block_offsets(), spec.jordan_sizes):
        G2[offset + (nk - 1) * p: offset + nk * p, :] = np.eye(p)
    return G2


def closed_loop_transfer(plant: StateSpace, K21, w: float, k: int) -> np.ndarray:
    """
    P_K(i w) = (C + D K21) R(i w, A + B K21) B + D, cross-checked against
    P(i w) (I - K21 R(i w, A) B)^-1.
    """
    A_K = plant.A + plant.B @ K21
    C_K = plant.C + plant.D @ K21
    direct = C_K @ Resolvent(A_K, 1j * w, k).solve(plant.B) + plant.D
    P = transfer_eval(plant, 1j * w, frequency_index=k)
    right = np.eye(plant.m) - K21 @ Resolvent(plant.A, 1j * w, k).solve(plant.B)
    via_identity = sla.solve(right.T, P.T).T
    gap = matrix_norm(direct - via_identity)
    if gap > 1e-8 * max(1.0, matrix_norm(direct)):
        logger.warning(f"P_K identity mismatch at omega={w}: {gap:.3e}")
    return direct


def _resolve_gains(plant: StateSpace, K21, L):
    A, B, C = plant.A, plant.B, plant.C
    if K21 is None:
        K21 = lqr_gain(A, B)
    else:
        K21 = np.asarray(K21)
        if spectral_abscissa(A + B @ K21) >= 0:
            raise PreconditionError("A + B K21 is not Hurwitz")
    if L is None:
        L = output_injection_gain(A, C)
    else:
        L = np.asarray(L)
        if spectral_abscissa(A + L @ C) >= 0:
            raise PreconditionError("A + L C is not Hurwitz")
    return K21, L


def _require_square(plant: StateSpace) -> None:
    if plant.m != plant.p:
        raise ShapeError(f"observer-based controllers need m = p, got m={plant.m}, p={plant.p}")


def _check_transfers(plant: StateSpace, exo: Exosystem, K21, tol: RankTolerance):
    transfers = []
    for k, w in enumerate(exo.frequencies):
        surjective_transfer(plant, w, k, tol)
        PK = closed_loop_transfer(plant, K21, w, k)
        if matrix_rank(PK, tol) < plant.p:
            raise NumericalRankAlert(f"P_K(i*{w}) is numerically singular (frequency index {k})")
        transfers.append(PK)
    return transfers


def _assemble(plant: StateSpace, G1, G2, K1, K2, L) -> Dict[str, np.ndarray]:
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    nz = G1.shape[0]
    G1_c = np.block([
        [G1, np.zeros((nz, plant.n))],
        [(B + L @ D) @ K1, A + B @ K2 + L @ (C + D @ K2)],
    ])
    G2_c = np.vstack([G2, -L])
    K_c = np.hstack([K1, K2])
    return {"G1": G1_c, "G2": G2_c, "K": K_c}


def _solve_coupling(plant: StateSpace, G1, G2, K21, exo: Exosystem):
    A_K = plant.A + plant.B @ K21
    C_K = plant.C + plant.D @ K21
    H = sylvester_structured_6(A_K, C_K, G2, exo)
    residual = sylvester_residual(H, G1, A_K, -G2 @ C_K)
    B1 = H @ plant.B + G2 @ plant.D
    return H, B1, residual


def observer_controller(
    plant: StateSpace,
    exo: Exosystem,
    K21=None,
    L=None,
    G2=None,
    tol: RankTolerance = RankTolerance(),
):
    """
    Observer-based controller for a general (Jordan) exosystem.

    Args:
        plant: Square, stabilizable and detectable plant.
        exo: Exosystem with arbitrary Jordan sizes.
        K21, L: Stabilizing gains; LQR / dual LQR when omitted.
        G2: Internal model input; identity in the last block of each chain
            when omitted. Each G2^{k n_k} must be invertible.

    Returns:
        (Controller, ObserverSynthesisRecord)

    Raises:
        ShapeError: m != p.
        NumericalRankAlert: (G1, B1) found unstabilizable.
    """
    _require_square(plant)
    p = plant.p
    spec = InternalModelSpec.from_exosystem(exo, p)
    G1 = build_jordan_internal_model(spec)
    K21, L = _resolve_gains(plant, K21, L)
    _check_transfers(plant, exo, K21, tol)

    G2 = default_g2(spec) if G2 is None else np.asarray(G2, dtype=complex)
    for offset, nk, w in zip(spec.block_offsets(), spec.jordan_sizes, exo.frequencies):
        last = G2[offset + (nk - 1) * p: offset + nk * p, :]
        if matrix_rank(last, tol) < p:
            raise PreconditionError(f"last G2 block of the chain at omega={w} is singular")

    H, B1, residual = _solve_coupling(plant, G1, G2, K21, exo)
    try:
        K1 = lqr_gain(G1, B1)
    except UnstabilizableError as exc:
        raise NumericalRankAlert(f"(G1, B1) is numerically unstabilizable: {exc}") from exc
    K2 = K21 + K1 @ H

    parts = _assemble(plant, G1, G2, K1, K2, L)
    record = ObserverSynthesisRecord(
        H=H, B1=B1, K1=K1, K2=K2, K21=K21, L=L, G2=G2, G1=G1,
        residual=residual, variant="observer",
    )
    ctrl = Controller(
        G1=parts["G1"], G2=parts["G2"], K=parts["K"],
        family="observer",
        parameters={
            "frequencies": list(exo.frequencies),
            "jordan_sizes": list(exo.jordan_sizes),
            "internal_model_dimension": spec.dimension,
        },
    )
    logger.info(f"Observer controller: dimension {ctrl.dimension}, Sylvester residual {residual:.2e}")
    return ctrl, record


def observer_controller_diag(
    plant: StateSpace,
    exo: Exosystem,
    K21=None,
    L=None,
    g2_choice: G2Choice = "inverse-transfer",
    tol: RankTolerance = RankTolerance(),
):
    """
    Observer-based controller for a diagonal exosystem with K1 = -B1*.

    g2_choice:
        "inverse-transfer"  G2^k = P_K(i w_k)^-1, giving B1^k = I and K1 = -I
        "identity"          G2^k = I
        list of blocks      custom invertible G2^k

    Returns:
        (Controller, ObserverSynthesisRecord)
    """
    require_diagonal(exo)
    _require_square(plant)
    p = plant.p
    spec = InternalModelSpec.from_exosystem(exo, p)
    G1 = build_jordan_internal_model(spec)
    K21, L = _resolve_gains(plant, K21, L)
    transfers = _check_transfers(plant, exo, K21, tol)

    if isinstance(g2_choice, str) and g2_choice == "inverse-transfer":
        blocks = [sla.solve(PK, np.eye(p)) for PK in transfers]
    elif isinstance(g2_choice, str) and g2_choice == "identity":
        blocks = [np.eye(p) for _ in transfers]
    elif isinstance(g2_choice, str):
        raise PreconditionError(f"unknown G2 choice '{g2_choice}'")
    else:
        blocks = [np.asarray(b) for b in g2_choice]
        if len(blocks) != exo.q:
            raise DimensionError(f"expected {exo.q} G2 blocks, got {len(blocks)}")
    G2 = np.vstack(blocks).astype(complex)

    H, B1, residual = _solve_coupling(plant, G1, G2, K21, exo)
    stability = check_diagonal_stability(G1, B1, spec, tol)
    if not stability.passed:
        raise NumericalRankAlert(f"G1 - B1 B1* is not Hurwitz: {stability.reason or stability.abscissa}")
    K1 = -B1.conj().T
    identity_gap = None
    if isinstance(g2_choice, str) and g2_choice == "inverse-transfer":
        identity = np.hstack([-np.eye(p, dtype=complex)] * exo.q)
        identity_gap = matrix_norm(K1 - identity)
        if identity_gap > IDENTITY_TOLERANCE * max(1.0, matrix_norm(K1)):
            raise NumericalError(f"-B1* deviates from -I by {identity_gap:.3e} for G2 = P_K^-1")
        K1 = identity
    K2 = K21 + K1 @ H

    parts = _assemble(plant, G1, G2, K1, K2, L)
    record = ObserverSynthesisRecord(
        H=H, B1=B1, K1=K1, K2=K2, K21=K21, L=L, G2=G2, G1=G1,
        residual=residual, variant="observer-diag", identity_gap=identity_gap,
    )
    ctrl = Controller(
        G1=parts["G1"], G2=parts["G2"], K=parts["K"],
        family="observer-diag",
        parameters={
            "frequencies": list(exo.frequencies),
            "g2_choice": g2_choice if isinstance(g2_choice, str) else "custom",
            "internal_model_dimension": spec.dimension,
        },
    )
    logger.info(f"Diagonal observer controller: dimension {ctrl.dimension}")
    return ctrl, record


def triangularize_closed_loop(cl: ClosedLoop, record: ObserverSynthesisRecord) -> TriangularForm:
    """
    Apply Qe = [[-I, 0, 0], [H, I, 0], [-I, 0, I]]; the diagonal blocks are
    A + B K21, G1 + B1 K1 and A + L C.
    """
    n = cl.plant_order
    nz = record.G1.shape[0]
    I_n = np.eye(n)
    Qe = np.block([
        [-I_n, np.zeros((n, nz)), np.zeros((n, n))],
        [record.H, np.eye(nz), np.zeros((nz, n))],
        [-I_n, np.zeros((n, nz)), I_n],
    ])
    return block_triangular_form(cl.Ae, Qe, [n, nz, n])
