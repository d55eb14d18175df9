"""
Internal Model Conditions
=========================
Rank-based checks of the internal model properties of a controller pair
(G1, G2):

    p-copy        G1 has, at every i*omega_k, at least p Jordan chains of
                  length >= n_k
    G-conditions  range:     ran(i omega_k - G1) ∩ ran(G2) = {0}
                  injective: ker(G2) = {0}
                  chain:     ker((i omega_k - G1)^{n_k - 1}) ⊆ ran(i omega_k - G1)

plus the invariance test for G1 + G2 K and the stability test for
G1 - G2 G2* with a diagonal G1.

Every check returns a report; nothing here raises on a failed condition.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from internal_model.builders import InternalModelSpec
from numerics.linalg import RankTolerance, matrix_norm, spectral_abscissa, svd_rank

logger = logging.getLogger(__name__)


@dataclass
class FrequencyConditions:
    """Per-frequency outcome of the G-conditions."""

    index: int
    frequency: float
    range_intersection: bool
    injective: bool
    chain_condition: bool
    rank_gap: float = 0.0

    @property
    def passed(self) -> bool:
        return self.range_intersection and self.injective and self.chain_condition


@dataclass
class GConditionsReport:
    """
    Outcome of check_g_conditions.

    Attributes:
        frequencies: One FrequencyConditions per omega_k.
        g2_rank: Numerical rank of G2.
        output_dim: Column count of G2 (p).
        max_rank_gap: Largest sigma_{r+1}/sigma_r seen in any rank decision;
            values near 1 mean a borderline decision.
    """

    frequencies: List[FrequencyConditions] = field(default_factory=list)
    g2_rank: int = 0
    output_dim: int = 0
    max_rank_gap: float = 0.0

    @property
    def passed(self) -> bool:
        return all(f.passed for f in self.frequencies)

    def failures(self) -> List[str]:
        out = []
        for f in self.frequencies:
            if not f.range_intersection:
                out.append(f"range-intersection at k={f.index} (omega={f.frequency})")
            if not f.injective:
                out.append(f"injectivity at k={f.index} (omega={f.frequency})")
            if not f.chain_condition:
                out.append(f"chain at k={f.index} (omega={f.frequency})")
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "g2_rank": self.g2_rank,
            "output_dim": self.output_dim,
            "max_rank_gap": self.max_rank_gap,
            "frequencies": [dict(asdict(f), passed=f.passed) for f in self.frequencies],
        }


def _shifted(G1: np.ndarray, w: float) -> np.ndarray:
    return 1j * w * np.eye(G1.shape[0]) - G1


def check_g_conditions(
    G1, G2, spec: InternalModelSpec, tol: RankTolerance = RankTolerance()
) -> GConditionsReport:
    """Evaluate the range, injectivity and chain conditions for every frequency of the spec."""
    G1 = np.asarray(G1, dtype=complex)
    G2 = np.asarray(G2, dtype=complex)
    g2_info = svd_rank(G2, tol)
    injective = g2_info.rank == G2.shape[1]
    report = GConditionsReport(g2_rank=g2_info.rank, output_dim=G2.shape[1])
    gaps = [g2_info.gap]

    for k, (w, nk) in enumerate(zip(spec.frequencies, spec.jordan_sizes)):
        M = _shifted(G1, w)
        m_info = svd_rank(M, tol)
        joint = svd_rank(np.hstack([M, G2]), tol)
        range_ok = joint.rank == m_info.rank + g2_info.rank

        if nk == 1:
            chain_ok = True
        else:
            kernel = svd_rank(np.linalg.matrix_power(M, nk - 1), tol).null_basis
            augmented = svd_rank(np.hstack([M, kernel]), tol)
            chain_ok = augmented.rank == m_info.rank
            gaps.append(augmented.gap)
        gaps.extend([m_info.gap, joint.gap])

        entry = FrequencyConditions(
            index=k,
            frequency=w,
            range_intersection=range_ok,
            injective=injective,
            chain_condition=chain_ok,
            rank_gap=float(max(m_info.gap, joint.gap)),
        )
        report.frequencies.append(entry)
        logger.debug(
            f"G-conditions k={k} omega={w}: range={range_ok} injective={injective} chain={chain_ok} "
            f"gap={entry.rank_gap:.2e}"
        )

    report.max_rank_gap = float(max(gaps)) if gaps else 0.0
    if not report.passed:
        logger.warning(f"G-conditions failed: {', '.join(report.failures())}")
    return report


@dataclass
class PCopyReport:
    """Outcome of check_p_copy: chain counts and kernel dimensions per frequency."""

    chain_counts: List[int] = field(default_factory=list)
    kernel_dims: List[int] = field(default_factory=list)
    output_dim: int = 0
    frequencies: List[float] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(
            c >= self.output_dim and d >= self.output_dim
            for c, d in zip(self.chain_counts, self.kernel_dims)
        )

    def failing_indices(self) -> List[int]:
        return [
            k for k, (c, d) in enumerate(zip(self.chain_counts, self.kernel_dims))
            if c < self.output_dim or d < self.output_dim
        ]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "output_dim": self.output_dim,
            "frequencies": self.frequencies,
            "chain_counts": self.chain_counts,
            "kernel_dims": self.kernel_dims,
        }


def check_p_copy(G1, spec: InternalModelSpec, tol: RankTolerance = RankTolerance()) -> PCopyReport:
    """
    Count Jordan chains of length >= n_k at each i*omega_k.

    chains_k = rank(M^{n_k - 1}) - rank(M^{n_k}) with M = G1 - i omega_k.
    """
    G1 = np.asarray(G1, dtype=complex)
    size = G1.shape[0]
    report = PCopyReport(output_dim=spec.output_dim, frequencies=list(spec.frequencies))
    for w, nk in zip(spec.frequencies, spec.jordan_sizes):
        M = -_shifted(G1, w)
        lower = np.linalg.matrix_power(M, nk - 1)
        upper = lower @ M
        chains = svd_rank(lower, tol).rank - svd_rank(upper, tol).rank
        kernel_dim = size - svd_rank(M, tol).rank
        report.chain_counts.append(int(chains))
        report.kernel_dims.append(int(kernel_dim))
    if not report.passed:
        logger.warning(f"p-copy check failed at frequency indices {report.failing_indices()}")
    return report


@dataclass
class FeedbackInvarianceResult:
    """Invariance of the G-conditions under G1 -> G1 + G2 K."""

    applicable: bool
    passed: bool
    reason: str = ""
    report: Optional[GConditionsReport] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "applicable": self.applicable,
            "passed": self.passed,
            "reason": self.reason,
            "report": self.report.to_dict() if self.report else None,
        }


def check_feedback_invariance(
    G1, G2, K, spec: InternalModelSpec, tol: RankTolerance = RankTolerance()
) -> FeedbackInvarianceResult:
    """
    If all n_k = 1, (G1, G2) satisfies the G-conditions and
    ker(i omega_k - G1) ⊆ ker(K) for every k, then (G1 + G2 K, G2) also
    satisfies them. Returns the check on the perturbed pair.
    """
    G1 = np.asarray(G1, dtype=complex)
    G2 = np.asarray(G2, dtype=complex)
    K = np.asarray(K, dtype=complex)
    if any(nk != 1 for nk in spec.jordan_sizes):
        return FeedbackInvarianceResult(False, False, "invariance check not applicable: exosystem is not diagonal")

    base = check_g_conditions(G1, G2, spec, tol)
    if not base.passed:
        return FeedbackInvarianceResult(False, False, "invariance check not applicable: (G1, G2) fails the G-conditions", base)

    scale = max(1.0, matrix_norm(K))
    for k, w in enumerate(spec.frequencies):
        kernel = svd_rank(_shifted(G1, w), tol).null_basis
        if kernel.shape[1] and matrix_norm(K @ kernel) > 1e-9 * scale:
            return FeedbackInvarianceResult(
                False, False,
                f"invariance check not applicable: ker(i omega_k - G1) not in ker(K) at k={k}",
            )

    perturbed = check_g_conditions(G1 + G2 @ K, G2, spec, tol)
    if not perturbed.passed:
        logger.warning("G-conditions lost under G1 + G2 K despite the kernel hypothesis")
    return FeedbackInvarianceResult(True, perturbed.passed, "", perturbed)


@dataclass
class DiagonalStabilityResult:
    """Stability of G1 - G2 G2* for a diagonal G1 with square blocks G2^k."""

    passed: bool
    abscissa: float
    singular_blocks: List[int] = field(default_factory=list)
    block_sizes: List[int] = field(default_factory=list)
    reason: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _diagonal_blocks(G1: np.ndarray, atol: float = 1e-12) -> List[int]:
    """Lengths of runs of equal consecutive diagonal entries."""
    diag = np.diag(G1)
    sizes, start = [], 0
    for i in range(1, len(diag) + 1):
        if i == len(diag) or abs(diag[i] - diag[start]) > atol * max(1.0, abs(diag[start])):
            sizes.append(i - start)
            start = i
    return sizes


def check_diagonal_stability(
    G1, G2, spec: Optional[InternalModelSpec] = None, tol: RankTolerance = RankTolerance()
) -> DiagonalStabilityResult:
    """
    For G1 = diag(i omega_k I_p) and invertible p x p blocks G2^k, the matrix
    G1 - G2 G2* is Hurwitz. Returns the measured abscissa and any singular blocks.
    """
    G1 = np.asarray(G1, dtype=complex)
    G2 = np.asarray(G2, dtype=complex)
    if matrix_norm(G1 - np.diag(np.diag(G1))) > 0:
        return DiagonalStabilityResult(False, float("nan"), reason="G1 is not diagonal")

    if spec is not None:
        sizes = [spec.output_dim * nk for nk in spec.jordan_sizes]
    else:
        sizes = _diagonal_blocks(G1)

    singular, start = [], 0
    for k, size in enumerate(sizes):
        block = G2[start:start + size, :]
        if block.shape[0] != block.shape[1]:
            return DiagonalStabilityResult(
                False, float("nan"), block_sizes=sizes,
                reason=f"block {k} is {block.shape[0]}x{block.shape[1]}, not square",
            )
        if svd_rank(block, tol).rank < size:
            singular.append(k)
        start += size

    abscissa = spectral_abscissa(G1 - G2 @ G2.conj().T)
    if singular:
        logger.warning(f"diagonal stability precondition fails: singular G2 blocks {singular}")
        return DiagonalStabilityResult(False, abscissa, singular, sizes, "singular G2 blocks")
    passed = abscissa < -1e-12
    if not passed:
        logger.warning(f"G1 - G2 G2* not Hurwitz: abscissa {abscissa:.3e}")
    return DiagonalStabilityResult(passed, abscissa, [], sizes)
