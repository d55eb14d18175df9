"""
Reduced-Order Internal Models
=============================
For a finite class of plants (nominal plus perturbed members) the regulator
only has to reproduce, at each frequency, the input directions

    S_k = span{ P~(i w_k)^-1 (C~ R(i w_k, A~) E~ e_k + F~ e_k) }

over all members. With p_k = dim S_k < p the internal model keeps p_k copies
of i w_k instead of p; frequencies with p_k = 0 are dropped.

Usage:
    bases = reduced_frequency_bases(plant, exo, members)
    ctrl = reduced_order_minimal_controller(plant, exo, members, epsilon=0.25)
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from controllers.minimal import require_diagonal, require_stable_plant
from numerics.errors import (
    ClassValidationError,
    PreconditionError,
    ResolventSingularityError,
    ShapeError,
)
from numerics.linalg import RankTolerance, block_diag, matrix_rank, svd_rank
from sysmodel.state_space import (
    Controller,
    Exosystem,
    PlantVariant,
    Resolvent,
    StateSpace,
    transfer_eval,
)

logger = logging.getLogger(__name__)


@dataclass
class ReducedFrequency:
    """
    Reduced internal model data at one frequency.

    Attributes:
        index: Frequency index k in the exosystem.
        frequency: omega_k.
        p_k: dim S_k.
        gain: m x dim(Y_k) block (orthonormal basis of S_k, or P(i w_k)^-1 when p_k = p).
    """

    index: int
    frequency: float
    p_k: int
    gain: Optional[np.ndarray]

    @property
    def copies(self) -> int:
        return 0 if self.gain is None else self.gain.shape[1]


def _member_transfer(member: PlantVariant, w: float, k: int, i: int, p: int, tol: RankTolerance) -> np.ndarray:
    try:
        P = transfer_eval(member.plant, 1j * w, frequency_index=k)
    except ResolventSingularityError as exc:
        raise ClassValidationError(
            f"member {i}: i*{w} is in the spectrum of A (frequency index {k})", i, k
        ) from exc
    if P.shape != (p, p) or matrix_rank(P, tol) < p:
        raise ClassValidationError(
            f"member {i}: P(i*{w}) is not invertible (frequency index {k})", i, k
        )
    return P


def reduced_frequency_bases(
    plant: StateSpace,
    exo: Exosystem,
    members: Sequence[PlantVariant],
    tol: RankTolerance = RankTolerance(),
) -> List[ReducedFrequency]:
    """
    Compute p_k and the gain block for every frequency.

    Raises:
        ShapeError: If the plant is not square.
        PreconditionError: If the exosystem is not diagonal or P(i w_k) is singular.
        ClassValidationError: If a member's P~(i w_k) is singular.
    """
    require_diagonal(exo)
    if plant.m != plant.p:
        raise ShapeError(f"reduced internal models need m = p, got m={plant.m}, p={plant.p}")
    if not members:
        raise PreconditionError("perturbation class is empty")
    p = plant.p
    r = exo.r

    result = []
    for k, w in enumerate(exo.frequencies):
        P = transfer_eval(plant, 1j * w, frequency_index=k)
        if matrix_rank(P, tol) < p:
            raise PreconditionError(f"P(i*{w}) is singular (frequency index {k})")
        e_k = np.zeros(r)
        e_k[k] = 1.0
        generators = []
        for i, member in enumerate(members):
            Pm = _member_transfer(member, w, k, i, p, tol)
            R = Resolvent(member.plant.A, 1j * w, k)
            rhs = member.plant.C @ R.solve(member.E @ e_k) + member.F @ e_k
            generators.append(sla.solve(Pm, rhs))
        info = svd_rank(np.column_stack(generators), tol)
        p_k = info.rank
        if p_k == 0:
            gain = None
        elif p_k >= p:
            gain = sla.solve(P, np.eye(p))
        else:
            gain = info.range_basis
        result.append(ReducedFrequency(index=k, frequency=w, p_k=p_k, gain=gain))
        logger.debug(f"Reduced IM at omega={w}: p_k={p_k}")

    logger.info(f"Reduced internal model copies per frequency: {[f.p_k for f in result]}")
    return result


def reduced_order_minimal_controller(
    plant: StateSpace,
    exo: Exosystem,
    members: Sequence[PlantVariant],
    epsilon: float,
    tol: RankTolerance = RankTolerance(),
) -> Controller:
    """
    Minimal-order controller with a reduced internal model for a finite class.

        G1 = diag(i w_k I_{dim Y_k}),  K = eps (K0^k)_k,  G2 = (-(P(i w_k) K0^k)^*)_k

    Raises:
        PreconditionError: Unstable plant, bad epsilon, or every S_k trivial.
    """
    if epsilon <= 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    require_stable_plant(plant)
    bases = reduced_frequency_bases(plant, exo, members, tol)
    kept = [b for b in bases if b.gain is not None]
    if not kept:
        raise PreconditionError("every generator space is trivial; nothing to regulate")

    G1_blocks, G2_blocks, K0_blocks = [], [], []
    for b in kept:
        P = transfer_eval(plant, 1j * b.frequency, frequency_index=b.index)
        G1_blocks.append(1j * b.frequency * np.eye(b.copies))
        G2_blocks.append(-(P @ b.gain).conj().T)
        K0_blocks.append(b.gain)

    ctrl = Controller(
        G1=block_diag(*G1_blocks).astype(complex),
        G2=np.vstack(G2_blocks).astype(complex),
        K=epsilon * np.hstack(K0_blocks).astype(complex),
        family="minimal-reduced",
        parameters={
            "epsilon": float(epsilon),
            "frequencies": [b.frequency for b in kept],
            "copies": [b.p_k for b in bases],
            "members": len(members),
        },
    )
    logger.info(
        f"Reduced minimal controller: dimension {ctrl.dimension} "
        f"(full internal model {plant.p * exo.q})"
    )
    return ctrl
