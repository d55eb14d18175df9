"""
Minimal-Order Controller
========================
Low-gain controller for exponentially stable plants and diagonal exosystems.

    Z  = Y^q
    G1 = diag(i omega_k I_p)
    K  = eps (K0^1, ..., K0^q),        P(i omega_k) K0^k invertible
    G2 = (-(P(i omega_k) K0^k)^*)_k    (= -I_p for K0^k = P(i omega_k)^+)

Also provides epsilon tuning, output-feedback pre-stabilization of the plant
and the real-valued form of the controller.

Usage:
    ctrl = minimal_controller(plant, exo, epsilon=0.25)
    eps = tune_epsilon(plant, exo, eps_max=1.0)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as sla

from numerics.errors import (
    FeedbackIllPosedError,
    PreconditionError,
    SearchFailureError,
    ShapeError,
    SurjectivityError,
)
from numerics.linalg import RankTolerance, block_diag, matrix_norm, matrix_rank, pinv, spectral_abscissa
from sysmodel.state_space import (
    Controller,
    Exosystem,
    StateSpace,
    assemble_closed_loop,
    exosystem_from_frequencies,
    transfer_eval,
)

logger = logging.getLogger(__name__)

GainChoice = Union[str, Sequence[np.ndarray]]

# Deepest grid level of the epsilon search
MAX_HALVINGS = 40


def require_stable_plant(plant: StateSpace) -> float:
    abscissa = spectral_abscissa(plant.A)
    if abscissa >= 0:
        raise PreconditionError(
            f"plant is not exponentially stable (abscissa {abscissa:.4e}); "
            f"pre-stabilize it first"
        )
    return abscissa


def require_diagonal(exo: Exosystem) -> None:
    if not exo.is_diagonal:
        raise PreconditionError(
            f"this construction needs a diagonal exosystem, got Jordan sizes {exo.jordan_sizes}"
        )


def surjective_transfer(plant: StateSpace, w: float, k: int, tol: RankTolerance = RankTolerance()) -> np.ndarray:
    """P(i omega_k), checked for full row rank."""
    P = transfer_eval(plant, 1j * w, frequency_index=k)
    rank = matrix_rank(P, tol)
    if rank < plant.p:
        raise SurjectivityError(
            f"P(i*{w}) has rank {rank} < p={plant.p} (frequency index {k})", k
        )
    return P


def _minimal_blocks(
    plant: StateSpace,
    exo: Exosystem,
    gain_choice: GainChoice,
    tol: RankTolerance,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return (G1, G2, K0) of the minimal-order controller."""
    require_stable_plant(plant)
    require_diagonal(exo)
    p, m = plant.p, plant.m
    custom = not isinstance(gain_choice, str)
    if not custom and gain_choice != "pseudoinverse":
        raise PreconditionError(f"unknown gain choice '{gain_choice}'")
    if custom and len(gain_choice) != exo.q:
        raise PreconditionError(f"expected {exo.q} custom K0 blocks, got {len(gain_choice)}")

    G1_blocks, G2_blocks, K0_blocks = [], [], []
    for k, w in enumerate(exo.frequencies):
        P = surjective_transfer(plant, w, k, tol)
        if custom:
            K0k = np.asarray(gain_choice[k])
            if K0k.shape != (m, p):
                raise PreconditionError(f"K0^{k} must be {m}x{p}, got shape {K0k.shape}")
            PK = P @ K0k
            if matrix_rank(PK, tol) < p:
                raise PreconditionError(f"P(i*{w}) K0^{k} is singular (frequency index {k})")
            G2k = -PK.conj().T
        else:
            K0k = pinv(P, tol)
            G2k = -np.eye(p, dtype=complex)
        G1_blocks.append(1j * w * np.eye(p))
        G2_blocks.append(G2k)
        K0_blocks.append(K0k)

    G1 = block_diag(*G1_blocks).astype(complex)
    G2 = np.vstack(G2_blocks).astype(complex)
    K0 = np.hstack(K0_blocks).astype(complex)
    return G1, G2, K0


def minimal_controller(
    plant: StateSpace,
    exo: Exosystem,
    epsilon: float,
    gain_choice: GainChoice = "pseudoinverse",
    tol: RankTolerance = RankTolerance(),
) -> Controller:
    """
    Build the minimal-order controller.

    Args:
        plant: Exponentially stable plant.
        exo: Diagonal exosystem.
        epsilon: Low-gain parameter (> 0).
        gain_choice: "pseudoinverse" or a list of q custom m x p blocks K0^k.

    Raises:
        PreconditionError: Unstable plant, non-diagonal exosystem, bad custom gains.
        SurjectivityError: P(i omega_k) rank deficient.
    """
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    G1, G2, K0 = _minimal_blocks(plant, exo, gain_choice, tol)
    ctrl = Controller(
        G1=G1,
        G2=G2,
        K=epsilon * K0,
        family="minimal",
        parameters={
            "epsilon": float(epsilon),
            "gain_choice": gain_choice if isinstance(gain_choice, str) else "custom",
            "frequencies": list(exo.frequencies),
        },
    )
    logger.info(f"Minimal controller: dimension {ctrl.dimension}, epsilon={epsilon}")
    return ctrl


def tune_epsilon(
    plant: StateSpace,
    exo: Exosystem,
    eps_max: float = 1.0,
    refinement: int = 20,
    gain_choice: GainChoice = "pseudoinverse",
    workers: int = 1,
    tol: RankTolerance = RankTolerance(),
    builder: Optional[Callable[[float], Controller]] = None,
) -> float:
    """
    Largest stabilizing epsilon on the grid eps_max * 2^-j, refined by bisection.

    A value is accepted only when both Ae(eps) and Ae(eps/2) are Hurwitz.

    Args:
        builder: Controller family as a function of epsilon, for the real and
            reduced forms. Its K must be linear in epsilon with G1, G2 fixed.
            The complex minimal controller with `gain_choice` when omitted.

    Raises:
        SearchFailureError: If no grid level down to eps_max * 2^-40 is accepted.
    """
    if eps_max <= 0:
        raise PreconditionError(f"eps_max must be positive, got {eps_max}")
    if builder is None:
        G1, G2, K0 = _minimal_blocks(plant, exo, gain_choice, tol)
    else:
        unit = builder(1.0)
        G1, G2, K0 = unit.G1, unit.G2, unit.K

    def hurwitz(eps: float) -> bool:
        ctrl = Controller(G1=G1, G2=G2, K=eps * K0)
        return assemble_closed_loop(plant, ctrl, exo).abscissa < 0

    grid = [eps_max * 2.0 ** (-j) for j in range(MAX_HALVINGS + 2)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stable = list(pool.map(hurwitz, grid))
    else:
        stable = [hurwitz(eps) for eps in grid]

    level = next(
        (j for j in range(MAX_HALVINGS + 1) if stable[j] and stable[j + 1]), None
    )
    if level is None:
        raise SearchFailureError(
            f"no stabilizing epsilon found in [{grid[MAX_HALVINGS]:.3e}, {eps_max}]"
        )
    if level == 0:
        logger.info(f"tune_epsilon: eps_max={eps_max} accepted")
        return float(eps_max)

    lo, hi = grid[level], grid[level - 1]
    for _ in range(refinement):
        mid = 0.5 * (lo + hi)
        if hurwitz(mid) and hurwitz(0.5 * mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"tune_epsilon: epsilon*={lo:.6g} (grid level {level})")
    return float(lo)


def prestabilize_output_feedback(plant: StateSpace, kappa: float) -> StateSpace:
    """
    Close u = -kappa y + u_new around the plant (K1 = -kappa I).

        (A + B K1 (I - D K1)^-1 C,  B (I - K1 D)^-1,  (I - D K1)^-1 C,  (I - D K1)^-1 D)

    Raises:
        ShapeError: kappa != 0 on a plant with m != p.
        FeedbackIllPosedError: I - D K1 singular.
    """
    if kappa == 0:
        return plant.with_matrices()
    if plant.m != plant.p:
        raise ShapeError(f"output feedback -kappa*I needs m = p, got m={plant.m}, p={plant.p}")
    p = plant.p
    K1 = -kappa * np.eye(p)
    I = np.eye(p)
    left = I - plant.D @ K1
    right = I - K1 @ plant.D
    if matrix_rank(left) < p:
        raise FeedbackIllPosedError(f"I - D K1 is singular for kappa={kappa}")
    left_inv_C = sla.solve(left, plant.C)
    left_inv_D = sla.solve(left, plant.D)
    B_new = sla.solve(right.T, plant.B.T).T
    A_new = plant.A + plant.B @ K1 @ left_inv_C
    stabilized = plant.with_matrices(A=A_new, B=B_new, C=left_inv_C, D=left_inv_D)
    logger.info(
        f"Output feedback kappa={kappa}: abscissa {spectral_abscissa(plant.A):.4e} -> "
        f"{spectral_abscissa(A_new):.4e}"
    )
    return stabilized


def _split_real_frequencies(exo: Exosystem) -> Tuple[List[float], bool]:
    positive = sorted(w for w in exo.frequencies if w > 0)
    negative = sorted(-w for w in exo.frequencies if w < 0)
    if positive != negative:
        raise PreconditionError(
            f"real form needs frequencies in +/- pairs, got {exo.frequencies}"
        )
    return positive, 0.0 in exo.frequencies


def real_form_similarity(output_dim: int, pairs: int, has_zero: bool) -> np.ndarray:
    """
    Unitary Q = diag(Q0, ..., Q0, I_p), Q0 = (1/sqrt 2) [[I, I], [iI, -iI]].

    Q* G1_real Q is the complex internal model ordered (w1, -w1, ..., 0).
    """
    I = np.eye(output_dim)
    Q0 = np.block([[I, I], [1j * I, -1j * I]]) / np.sqrt(2.0)
    blocks = [Q0] * pairs + ([I.astype(complex)] if has_zero else [])
    return block_diag(*blocks)


def minimal_controller_real(
    plant: StateSpace,
    exo: Exosystem,
    epsilon: float,
    tol: RankTolerance = RankTolerance(),
) -> Controller:
    """
    Real-valued minimal-order controller for a real plant.

    For each positive frequency w the internal model block is
    [[0, w I], [-w I, 0]] with K0 = (Re P(iw)^+, Im P(iw)^+) and G2 = (-I; 0);
    a zero frequency contributes 0_p, P(0)^+ and -I.

    Under Q = real_form_similarity(...) the controller equals the complex
    minimal controller with custom gains K0 = P(+-iw)^+ / sqrt 2 on the pairs
    and P(0)^+ at zero (see real_form_counterpart). Rescaled to G2 = -I, the
    pairs therefore carry gain epsilon / 2 and the zero block epsilon; both
    are recorded in `parameters`.

    Raises:
        PreconditionError: Complex plant data, unpaired frequencies, or
            P(-iw) != conj P(iw).
    """
    if not plant.is_real:
        raise PreconditionError("real form needs a plant with real matrices")
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    require_stable_plant(plant)
    require_diagonal(exo)
    positive, has_zero = _split_real_frequencies(exo)
    real_plant = plant.with_matrices(A=plant.A.real, B=plant.B.real, C=plant.C.real, D=plant.D.real)
    p = plant.p
    I = np.eye(p)
    Z = np.zeros((p, p))

    G1_blocks, G2_blocks, K0_blocks = [], [], []
    for w in positive:
        k = exo.frequencies.index(w)
        P = surjective_transfer(real_plant, w, k, tol)
        P_neg = transfer_eval(real_plant, -1j * w)
        if matrix_norm(P_neg - P.conj()) > 1e-10 * max(1.0, matrix_norm(P)):
            raise PreconditionError(f"P(-i*{w}) is not the conjugate of P(i*{w})")
        Pd = pinv(P, tol)
        G1_blocks.append(np.block([[Z, w * I], [-w * I, Z]]))
        G2_blocks.append(np.vstack([-I, Z]))
        K0_blocks.append(np.hstack([Pd.real, Pd.imag]))
    if has_zero:
        k = exo.frequencies.index(0.0)
        P0 = surjective_transfer(real_plant, 0.0, k, tol)
        G1_blocks.append(Z.copy())
        G2_blocks.append(-I)
        K0_blocks.append(pinv(P0.real, tol))

    complex_order = []
    for w in positive:
        complex_order.extend([w, -w])
    if has_zero:
        complex_order.append(0.0)

    ctrl = Controller(
        G1=block_diag(*G1_blocks),
        G2=np.vstack(G2_blocks),
        K=epsilon * np.hstack(K0_blocks),
        family="minimal-real",
        parameters={
            "epsilon": float(epsilon),
            "gain_choice": "pseudoinverse",
            "frequencies": list(exo.frequencies),
            "complex_order": complex_order,
            "pair_epsilon": 0.5 * float(epsilon) if positive else None,
            "zero_epsilon": float(epsilon) if has_zero else None,
        },
    )
    logger.info(f"Real-form minimal controller: dimension {ctrl.dimension}, epsilon={epsilon}")
    return ctrl


def real_form_counterpart(
    plant: StateSpace,
    ctrl: Controller,
    tol: RankTolerance = RankTolerance(),
) -> Tuple[Controller, np.ndarray]:
    """
    Complex minimal controller that the real form maps to, and the similarity Q.

    Returns:
        (Controller with (Q* G1 Q, Q* G2, K Q) in the ordering
         ctrl.parameters["complex_order"], Q)
    """
    if ctrl.family != "minimal-real":
        raise PreconditionError(f"expected a minimal-real controller, got '{ctrl.family}'")
    order = list(ctrl.parameters["complex_order"])
    has_zero = 0.0 in order
    pairs = (len(order) - int(has_zero)) // 2
    exo = exosystem_from_frequencies(order, [1] * len(order), state_dim=plant.n, output_dim=plant.p)

    gains = []
    for w in order:
        if w == 0.0:
            gains.append(pinv(transfer_eval(plant, 0.0), tol))
        elif w > 0:
            gains.append(pinv(transfer_eval(plant, 1j * w), tol) / np.sqrt(2.0))
        else:
            gains.append(gains[-1].conj())

    counterpart = minimal_controller(plant, exo, ctrl.parameters["epsilon"], gain_choice=gains, tol=tol)
    return counterpart, real_form_similarity(plant.p, pairs, has_zero)
