"""
Triangular Controller
=====================
Controller on Z = Z0 x X whose dynamics are block upper triangular:

    G1_c = [[G1, G2 (C + D K2)], [0, A + B K2 + L (C + D K2)]]
    G2_c = [[G2], [L]]
    K_c  = [K1, -K2]

with the Jordan internal model G1 on Z0 = Y^{n_1} x ... x Y^{n_q}, K1 acting
on the first block of every chain, H the solution of

    H G1 = (A + L1 C) H + (B + L1 D) K1,

C1 = C H + D K1, G2 stabilizing G1 + G2 C1 and L = L1 + H G2. A+BK2 and
A+L1C are Hurwitz.

Three variants: general exosystem (G2 from a dual Riccati equation),
diagonal exosystem (G2 = -C1* in closed form) and a reduced internal model
for a finite perturbation class.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import scipy.linalg as sla

from controllers.minimal import require_diagonal, surjective_transfer
from controllers.reduced import reduced_frequency_bases
from controllers.stabilize import lqr_gain, output_injection_gain
from internal_model.builders import InternalModelSpec, build_jordan_internal_model
from internal_model.conditions import check_diagonal_stability
from numerics.equations import sylvester_residual
from numerics.errors import (
    DimensionError,
    NumericalError,
    NumericalRankAlert,
    PreconditionError,
    UndetectableError,
)
from numerics.linalg import (
    RankTolerance,
    block_diag,
    eigvals,
    matrix_norm,
    matrix_rank,
    pinv,
    spectral_abscissa,
)
from sysmodel.serialization import matrix_to_json
from sysmodel.state_space import (
    ClosedLoop,
    Controller,
    Exosystem,
    PlantVariant,
    Resolvent,
    StateSpace,
    transfer_eval,
)

logger = logging.getLogger(__name__)

GainChoice = Union[str, Sequence[np.ndarray]]

# Relative gap allowed between -C1* and the exact -I of the P_L pseudoinverse choice
IDENTITY_TOLERANCE = 1e-8


@dataclass
class TriangularSynthesisRecord:
    """Intermediate operators of a triangular synthesis."""

    K1: np.ndarray
    K2: np.ndarray
    L1: np.ndarray
    H: np.ndarray
    C1: np.ndarray
    G2: np.ndarray
    L: np.ndarray
    G1: np.ndarray
    residual: float = 0.0
    variant: str = "triangular"
    # ||-C1* + I||, diagonal variant with K1 = P_L^+ only
    identity_gap: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        data = {
            name: matrix_to_json(getattr(self, name))
            for name in ("K1", "K2", "L1", "H", "C1", "G2", "L", "G1")
        }
        data["sylvester_residual"] = self.residual
        data["variant"] = self.variant
        data["identity_gap"] = self.identity_gap
        return data


def sylvester_structured_5(A_L, B_L, K1, exo: Exosystem) -> np.ndarray:
    """
    Solve H G1 = A_L H + B_L K1 for the Jordan internal model G1 of `exo`.

        H_k^l = sum_{j=1..l} (-1)^{l-j} R(i w_k, A_L)^{l+1-j} B_L K1^{kj}

    Raises:
        ResolventSingularityError: If i w_k is an eigenvalue of A_L.
    """
    A_L = np.asarray(A_L)
    B_L = np.asarray(B_L)
    K1 = np.asarray(K1)
    n = A_L.shape[0]
    if K1.shape[1] % exo.r:
        raise DimensionError(f"K1 has {K1.shape[1]} columns, not a multiple of r={exo.r}")
    p = K1.shape[1] // exo.r
    H = np.zeros((n, K1.shape[1]), dtype=complex)

    col = 0
    for k, (w, nk) in enumerate(zip(exo.frequencies, exo.jordan_sizes)):
        R = Resolvent(A_L, 1j * w, frequency_index=k)
        # powers[j][s-1] = R^s B_L K1^{kj}
        powers = []
        for j in range(nk):
            W = B_L @ K1[:, col + j * p: col + (j + 1) * p]
            chain, current = [], W.astype(complex)
            for _ in range(nk - j):
                current = R.solve(current)
                chain.append(current)
            powers.append(chain)
        for l in range(1, nk + 1):
            block = np.zeros((n, p), dtype=complex)
            for j in range(1, l + 1):
                block += (-1) ** (l - j) * powers[j - 1][l - j]
            H[:, col + (l - 1) * p: col + l * p] = block
        col += nk * p
    return H


def _resolve_gains(plant: StateSpace, K2, L1):
    A, B, C = plant.A, plant.B, plant.C
    if K2 is None:
        K2 = lqr_gain(A, B)
    else:
        K2 = np.asarray(K2)
        if spectral_abscissa(A + B @ K2) >= 0:
            raise PreconditionError("A + B K2 is not Hurwitz")
    if L1 is None:
        L1 = output_injection_gain(A, C)
    else:
        L1 = np.asarray(L1)
        if spectral_abscissa(A + L1 @ C) >= 0:
            raise PreconditionError("A + L1 C is not Hurwitz")
    return K2, L1


def observer_transfer(plant: StateSpace, L1, w: float, k: int) -> np.ndarray:
    """
    P_L(i w) = C R(i w, A + L1 C)(B + L1 D) + D, cross-checked against
    (I - C R(i w, A) L1)^-1 P(i w).
    """
    A_L = plant.A + L1 @ plant.C
    B_L = plant.B + L1 @ plant.D
    direct = plant.C @ Resolvent(A_L, 1j * w, k).solve(B_L) + plant.D
    P = transfer_eval(plant, 1j * w, frequency_index=k)
    left = np.eye(plant.p) - plant.C @ Resolvent(plant.A, 1j * w, k).solve(L1)
    via_identity = sla.solve(left, P)
    gap = matrix_norm(direct - via_identity)
    if gap > 1e-8 * max(1.0, matrix_norm(direct)):
        logger.warning(f"P_L identity mismatch at omega={w}: {gap:.3e}")
    return direct


def _assemble(plant: StateSpace, G1, G2, K1, K2, L1, H) -> Dict[str, np.ndarray]:
    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    C1 = C @ H + D @ K1
    L = L1 + H @ G2
    C_K2 = C + D @ K2
    nz = G1.shape[0]
    n = plant.n
    G1_c = np.block([
        [G1, G2 @ C_K2],
        [np.zeros((n, nz)), A + B @ K2 + L @ C_K2],
    ])
    G2_c = np.vstack([G2, L])
    K_c = np.hstack([K1, -K2])
    return {"G1": G1_c, "G2": G2_c, "K": K_c, "C1": C1, "L": L}


def _coupling_residual(H, G1, plant: StateSpace, L1, K1) -> float:
    A_L = plant.A + L1 @ plant.C
    B_L = plant.B + L1 @ plant.D
    return sylvester_residual(H, A_L, G1, B_L @ K1)


def triangular_controller(
    plant: StateSpace,
    exo: Exosystem,
    K2=None,
    L1=None,
    k1_choice: GainChoice = "pseudoinverse",
    tol: RankTolerance = RankTolerance(),
):
    """
    Triangular controller for a general (Jordan) exosystem.

    Args:
        plant: Stabilizable and detectable plant (may be unstable).
        exo: Exosystem with arbitrary Jordan sizes.
        K2, L1: Stabilizing gains; computed by LQR / dual LQR when omitted.
        k1_choice: "pseudoinverse" or q custom m x p blocks K1^{k1}.

    Returns:
        (Controller, TriangularSynthesisRecord)

    Raises:
        SurjectivityError: P(i w_k) rank deficient.
        NumericalRankAlert: (C1, G1) found undetectable.
    """
    p, m = plant.p, plant.m
    spec = InternalModelSpec.from_exosystem(exo, p)
    G1 = build_jordan_internal_model(spec)
    K2, L1 = _resolve_gains(plant, K2, L1)
    custom = not isinstance(k1_choice, str)

    K1 = np.zeros((m, spec.dimension), dtype=complex)
    for k, (w, offset) in enumerate(zip(exo.frequencies, spec.block_offsets())):
        P = surjective_transfer(plant, w, k, tol)
        block = np.asarray(k1_choice[k]) if custom else pinv(P, tol)
        if matrix_rank(P @ block, tol) < p:
            raise PreconditionError(f"P(i*{w}) K1^{k}1 is singular (frequency index {k})")
        PL = observer_transfer(plant, L1, w, k)
        if matrix_rank(PL @ block, tol) < p:
            raise NumericalRankAlert(f"P_L(i*{w}) K1^{k}1 is singular (frequency index {k})")
        K1[:, offset:offset + p] = block

    A_L = plant.A + L1 @ plant.C
    B_L = plant.B + L1 @ plant.D
    H = sylvester_structured_5(A_L, B_L, K1, exo)
    C1 = plant.C @ H + plant.D @ K1
    try:
        G2 = output_injection_gain(G1, C1)
    except UndetectableError as exc:
        raise NumericalRankAlert(f"(C1, G1) is numerically undetectable: {exc}") from exc

    parts = _assemble(plant, G1, G2, K1, K2, L1, H)
    residual = _coupling_residual(H, G1, plant, L1, K1)
    record = TriangularSynthesisRecord(
        K1=K1, K2=K2, L1=L1, H=H, C1=parts["C1"], G2=G2, L=parts["L"], G1=G1,
        residual=residual, variant="triangular",
    )
    ctrl = Controller(
        G1=parts["G1"], G2=parts["G2"], K=parts["K"],
        family="triangular",
        parameters={
            "frequencies": list(exo.frequencies),
            "jordan_sizes": list(exo.jordan_sizes),
            "k1_choice": k1_choice if isinstance(k1_choice, str) else "custom",
            "internal_model_dimension": spec.dimension,
        },
    )
    logger.info(
        f"Triangular controller: dimension {ctrl.dimension}, Sylvester residual {residual:.2e}"
    )
    return ctrl, record


def triangular_controller_diag(
    plant: StateSpace,
    exo: Exosystem,
    K2=None,
    L1=None,
    k1_choice: GainChoice = "pl-pseudoinverse",
    tol: RankTolerance = RankTolerance(),
):
    """
    Triangular controller for a diagonal exosystem with G2 = -C1* in closed form.

    k1_choice:
        "pl-pseudoinverse"  K1^k = P_L(i w_k)^+, giving G2^k = -I exactly
        "pseudoinverse"     K1^k = P(i w_k)^+
        list of blocks      custom K1^k

    Returns:
        (Controller, TriangularSynthesisRecord)
    """
    require_diagonal(exo)
    p, m = plant.p, plant.m
    spec = InternalModelSpec.from_exosystem(exo, p)
    G1 = build_jordan_internal_model(spec)
    K2, L1 = _resolve_gains(plant, K2, L1)
    exact_identity = k1_choice == "pl-pseudoinverse"
    if isinstance(k1_choice, str) and k1_choice not in ("pl-pseudoinverse", "pseudoinverse"):
        raise PreconditionError(f"unknown K1 choice '{k1_choice}'")

    K1_blocks = []
    for k, w in enumerate(exo.frequencies):
        P = surjective_transfer(plant, w, k, tol)
        PL = observer_transfer(plant, L1, w, k)
        if k1_choice == "pl-pseudoinverse":
            block = pinv(PL, tol)
        elif k1_choice == "pseudoinverse":
            block = pinv(P, tol)
        else:
            block = np.asarray(k1_choice[k])
        if matrix_rank(P @ block, tol) < p:
            raise PreconditionError(f"P(i*{w}) K1^{k} is singular (frequency index {k})")
        K1_blocks.append(block)
    K1 = np.hstack(K1_blocks).astype(complex)

    A_L = plant.A + L1 @ plant.C
    B_L = plant.B + L1 @ plant.D
    H = sylvester_structured_5(A_L, B_L, K1, exo)
    C1 = plant.C @ H + plant.D @ K1
    G2 = -C1.conj().T
    identity_gap = None
    if exact_identity:
        identity = np.vstack([-np.eye(p, dtype=complex)] * exo.q)
        identity_gap = matrix_norm(G2 - identity)
        if identity_gap > IDENTITY_TOLERANCE * max(1.0, matrix_norm(G2)):
            raise NumericalError(f"-C1* deviates from -I by {identity_gap:.3e} for K1 = P_L^+")
        G2 = identity

    stability = check_diagonal_stability(G1, G2, spec, tol)
    if not stability.passed:
        raise NumericalRankAlert(f"G1 - G2 G2* is not Hurwitz: {stability.reason or stability.abscissa}")

    parts = _assemble(plant, G1, G2, K1, K2, L1, H)
    residual = _coupling_residual(H, G1, plant, L1, K1)
    record = TriangularSynthesisRecord(
        K1=K1, K2=K2, L1=L1, H=H, C1=parts["C1"], G2=G2, L=parts["L"], G1=G1,
        residual=residual, variant="triangular-diag", identity_gap=identity_gap,
    )
    ctrl = Controller(
        G1=parts["G1"], G2=parts["G2"], K=parts["K"],
        family="triangular-diag",
        parameters={
            "frequencies": list(exo.frequencies),
            "k1_choice": k1_choice if isinstance(k1_choice, str) else "custom",
            "internal_model_dimension": spec.dimension,
        },
    )
    logger.info(f"Diagonal triangular controller: dimension {ctrl.dimension}")
    return ctrl, record


def triangular_controller_reduced(
    plant: StateSpace,
    exo: Exosystem,
    members: Sequence[PlantVariant],
    K2=None,
    L1=None,
    tol: RankTolerance = RankTolerance(),
):
    """
    Diagonal triangular controller with a reduced internal model for a finite class.

    K1^k is a basis of S_k (or P(i w_k)^-1 when p_k = p); G2 = -C1*.

    Returns:
        (Controller, TriangularSynthesisRecord)
    """
    require_diagonal(exo)
    bases = reduced_frequency_bases(plant, exo, members, tol)
    kept = [b for b in bases if b.gain is not None]
    if not kept:
        raise PreconditionError("every generator space is trivial; nothing to regulate")
    K2, L1 = _resolve_gains(plant, K2, L1)
    A_L = plant.A + L1 @ plant.C
    B_L = plant.B + L1 @ plant.D

    G1 = block_diag(*[1j * b.frequency * np.eye(b.copies) for b in kept]).astype(complex)
    K1 = np.hstack([b.gain for b in kept]).astype(complex)
    H = np.hstack([
        Resolvent(A_L, 1j * b.frequency, b.index).solve(B_L @ b.gain) for b in kept
    ])
    C1 = plant.C @ H + plant.D @ K1
    G2 = -C1.conj().T
    abscissa = spectral_abscissa(G1 + G2 @ C1)
    if abscissa >= 0:
        raise NumericalRankAlert(f"G1 + G2 C1 is not Hurwitz (abscissa {abscissa:.3e})")

    parts = _assemble(plant, G1, G2, K1, K2, L1, H)
    residual = _coupling_residual(H, G1, plant, L1, K1)
    record = TriangularSynthesisRecord(
        K1=K1, K2=K2, L1=L1, H=H, C1=parts["C1"], G2=G2, L=parts["L"], G1=G1,
        residual=residual, variant="triangular-reduced",
    )
    ctrl = Controller(
        G1=parts["G1"], G2=parts["G2"], K=parts["K"],
        family="triangular-reduced",
        parameters={
            "frequencies": [b.frequency for b in kept],
            "copies": [b.p_k for b in bases],
            "members": len(members),
            "internal_model_dimension": G1.shape[0],
        },
    )
    logger.info(
        f"Reduced triangular controller: dimension {ctrl.dimension} "
        f"(internal model {G1.shape[0]} of {plant.p * exo.q})"
    )
    return ctrl, record


@dataclass
class TriangularForm:
    """Result of a block similarity transform of Ae."""

    transformed: np.ndarray
    lower_norm: float
    diagonal_blocks: List[np.ndarray] = field(default_factory=list)

    def block_spectra(self) -> np.ndarray:
        return np.concatenate([eigvals(B) for B in self.diagonal_blocks])


def block_triangular_form(Ae, Qe, sizes: Sequence[int]) -> TriangularForm:
    """Qe Ae Qe^-1 split into blocks of the given sizes; reports the strictly lower part."""
    Ae = np.asarray(Ae)
    Qe = np.asarray(Qe)
    T = Qe @ Ae @ np.linalg.inv(Qe)
    bounds = np.cumsum([0] + list(sizes))
    lower = np.zeros_like(T)
    blocks = []
    for i in range(len(sizes)):
        rows = slice(bounds[i], bounds[i + 1])
        blocks.append(T[rows, rows])
        for j in range(i):
            lower[rows, bounds[j]:bounds[j + 1]] = T[rows, bounds[j]:bounds[j + 1]]
    return TriangularForm(transformed=T, lower_norm=matrix_norm(lower), diagonal_blocks=blocks)


def triangularize_closed_loop(cl: ClosedLoop, record: TriangularSynthesisRecord) -> TriangularForm:
    """
    Apply Qe = [[I, 0, 0], [0, I, 0], [-I, H, -I]]; the diagonal blocks are
    A + B K2, G1 + G2 C1 and A + L1 C.
    """
    n = cl.plant_order
    nz = record.G1.shape[0]
    I_n = np.eye(n)
    Qe = np.block([
        [I_n, np.zeros((n, nz)), np.zeros((n, n))],
        [np.zeros((nz, n)), np.eye(nz), np.zeros((nz, n))],
        [-I_n, record.H, -I_n],
    ])
    return block_triangular_form(cl.Ae, Qe, [n, nz, n])
