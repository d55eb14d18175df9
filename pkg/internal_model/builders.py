"""
Internal Model Builders
=======================
Jordan-block internal models and frequency retuning.

Usage:
    spec = InternalModelSpec.from_exosystem(exo, output_dim=2)
    G1 = build_jordan_internal_model(spec)
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np

from numerics.errors import ValidationError
from numerics.linalg import block_diag
from sysmodel.state_space import Controller, Exosystem, jordan_block

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InternalModelSpec:
    """Frequencies omega_k, Jordan sizes n_k and output dimension p."""

    frequencies: tuple
    jordan_sizes: tuple
    output_dim: int

    def __post_init__(self):
        object.__setattr__(self, "frequencies", tuple(float(w) for w in self.frequencies))
        object.__setattr__(self, "jordan_sizes", tuple(int(s) for s in self.jordan_sizes))
        if len(self.frequencies) != len(self.jordan_sizes):
            raise ValidationError("frequencies and jordan_sizes must have equal length")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ValidationError(f"frequencies must be distinct, got {self.frequencies}")
        if any(s < 1 for s in self.jordan_sizes):
            raise ValidationError(f"Jordan sizes must be >= 1, got {self.jordan_sizes}")
        if self.output_dim < 1:
            raise ValidationError(f"output_dim must be >= 1, got {self.output_dim}")

    @classmethod
    def from_exosystem(cls, exo: Exosystem, output_dim: int) -> "InternalModelSpec":
        return cls(tuple(exo.frequencies), tuple(exo.jordan_sizes), output_dim)

    @property
    def q(self) -> int:
        return len(self.frequencies)

    @property
    def dimension(self) -> int:
        """Size of Z0 = Y^{n_1} x ... x Y^{n_q}."""
        return self.output_dim * sum(self.jordan_sizes)

    def block_offsets(self) -> List[int]:
        """Start row of each frequency block in Z0."""
        offsets, start = [], 0
        for nk in self.jordan_sizes:
            offsets.append(start)
            start += nk * self.output_dim
        return offsets


def build_jordan_internal_model(spec: InternalModelSpec) -> np.ndarray:
    """
    G1 = blockdiag_k J_Y(i omega_k) where J_Y has n_k diagonal blocks
    i omega_k I_p and I_p on the block superdiagonal.
    """
    I = np.eye(spec.output_dim)
    G1 = block_diag(*[
        jordan_block(1j * w, nk, I) for w, nk in zip(spec.frequencies, spec.jordan_sizes)
    ]).astype(complex)
    logger.debug(f"Built internal model of size {G1.shape[0]} for {spec.q} frequencies")
    return G1


def retune_frequency(ctrl: Controller, old: float, new: float, atol: float = 1e-12) -> Controller:
    """
    Move internal model eigenvalues from i*old to i*new.

    Only diagonal entries of G1 equal to i*old are changed, which covers the
    diagonal internal models of the minimal-order family.

    Raises:
        ValidationError: If no diagonal entry matches i*old.
    """
    G1 = np.array(ctrl.G1, dtype=complex)
    diag = np.diag(G1)
    hits = np.abs(diag - 1j * old) <= atol * max(1.0, abs(old))
    if not np.any(hits):
        raise ValidationError(f"no internal model eigenvalue at i*{old}")
    idx = np.flatnonzero(hits)
    G1[idx, idx] = 1j * new
    parameters = dict(ctrl.parameters)
    parameters["retuned"] = {"from": float(old), "to": float(new), "entries": int(idx.size)}
    logger.info(f"Retuned {idx.size} internal model entries from {old} to {new}")
    return Controller(G1=G1, G2=ctrl.G2, K=ctrl.K, family=ctrl.family, parameters=parameters)
