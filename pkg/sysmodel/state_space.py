"""
State-Space Data Model
======================
Plant, exosystem, controller and closed-loop value objects together with
transfer-function evaluation and closed-loop assembly.

    plant       x' = A x + B u + E v,     y = C x + D u + F v
    exosystem   v' = S v,                 y_ref = -F v  (when E = 0)
    controller  z' = G1 z + G2 e,         u = K z
    closed loop xe' = Ae xe + Be v,       e = Ce xe + De v

Usage:
    plant = StateSpace(A, B, C, D)
    exo = exosystem_from_frequencies([0.0], [1], E=np.zeros((1, 1)), F=[[-1.0]])
    cl = assemble_closed_loop(plant, controller, exo)
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

from numerics.errors import DimensionError, ResolventSingularityError, ValidationError
from numerics.linalg import (
    RankTolerance,
    as_matrix,
    block_diag,
    expm,
    matrix_norm,
    matrix_rank,
    spectral_abscissa,
)

logger = logging.getLogger(__name__)

# sigma_min(lambda I - A) below this (relative to max(1, ||A||)) counts as singular
RESOLVENT_TOLERANCE = 1e-10


def _is_real_array(M: np.ndarray) -> bool:
    return not np.iscomplexobj(M) or bool(np.all(M.imag == 0))


@dataclass(eq=False)
class StateSpace:
    """
    Finite-dimensional realization (A, B, C, D).

    Attributes:
        A: n x n state matrix.
        B: n x m input matrix.
        C: p x n output matrix.
        D: p x m feedthrough matrix.
        state_labels / input_labels / output_labels: Optional names.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_labels: Optional[List[str]] = None
    input_labels: Optional[List[str]] = None
    output_labels: Optional[List[str]] = None

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got shape {self.A.shape}")
        self.B = _as_block(self.B, "B", rows=n)
        self.C = _as_block(self.C, "C", cols=n)
        m = self.B.shape[1]
        p = self.C.shape[0]
        self.D = _as_block(self.D, "D", rows=p, cols=m)
        for name, labels, size in (
            ("state_labels", self.state_labels, n),
            ("input_labels", self.input_labels, m),
            ("output_labels", self.output_labels, p),
        ):
            if labels is not None and len(labels) != size:
                raise DimensionError(f"{name} has {len(labels)} entries, expected {size}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    @property
    def is_real(self) -> bool:
        """True when every matrix has zero imaginary part."""
        return all(_is_real_array(M) for M in (self.A, self.B, self.C, self.D))

    def with_matrices(self, **kwargs) -> "StateSpace":
        """Copy with some of A, B, C, D replaced; labels are kept."""
        return StateSpace(
            A=kwargs.get("A", self.A),
            B=kwargs.get("B", self.B),
            C=kwargs.get("C", self.C),
            D=kwargs.get("D", self.D),
            state_labels=self.state_labels,
            input_labels=self.input_labels,
            output_labels=self.output_labels,
        )


def _as_block(M, name: str, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    """Like as_matrix, but accepts empty blocks and checks the expected shape."""
    arr = np.asarray(M)
    if arr.size == 0:
        arr = np.zeros((rows or 0, cols or 0))
    arr = as_matrix(arr, name)
    if rows is not None and arr.shape[0] != rows:
        raise DimensionError(f"{name} must have {rows} rows, got shape {arr.shape}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionError(f"{name} must have {cols} columns, got shape {arr.shape}")
    return arr


@dataclass(eq=False)
class Exosystem:
    """
    Exosystem (S, E, F) with frequencies omega_k and Jordan sizes n_k.

    S acts on W = C^r with r = sum(n_k). Each eigenvalue i*omega_k has
    geometric multiplicity one.
    """

    frequencies: List[float]
    jordan_sizes: List[int]
    S: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.frequencies = [float(w) for w in self.frequencies]
        self.jordan_sizes = [int(s) for s in self.jordan_sizes]
        if len(self.frequencies) != len(self.jordan_sizes):
            raise ValidationError(
                f"{len(self.frequencies)} frequencies but {len(self.jordan_sizes)} Jordan sizes"
            )
        if not self.frequencies:
            raise ValidationError("exosystem needs at least one frequency")
        if len(set(self.frequencies)) != len(self.frequencies):
            raise ValidationError(f"frequencies must be distinct, got {self.frequencies}")
        if any(s < 1 for s in self.jordan_sizes):
            raise ValidationError(f"Jordan sizes must be >= 1, got {self.jordan_sizes}")

        self.S = as_matrix(self.S, "S")
        r = sum(self.jordan_sizes)
        if self.S.shape != (r, r):
            raise DimensionError(f"S must be {r}x{r}, got shape {self.S.shape}")
        self.E = _as_block(self.E, "E", cols=r)
        self.F = _as_block(self.F, "F", cols=r)
        self._validate_spectrum()

    def _validate_spectrum(self) -> None:
        r = self.r
        identity = np.eye(r)
        scale = 1.0 + matrix_norm(self.S)
        annihilator = np.eye(r, dtype=complex)
        for k, (w, nk) in enumerate(zip(self.frequencies, self.jordan_sizes)):
            shifted = 1j * w * identity - self.S
            if matrix_rank(shifted) != r - 1:
                raise ValidationError(
                    f"i*{w} must be an eigenvalue of S with geometric multiplicity 1 (k={k})"
                )
            annihilator = annihilator @ np.linalg.matrix_power(shifted, nk)
        if matrix_norm(annihilator) > 1e-8 * scale ** r:
            raise ValidationError("S has eigenvalues off the listed imaginary frequencies")

    @property
    def r(self) -> int:
        return self.S.shape[0]

    @property
    def q(self) -> int:
        return len(self.frequencies)

    @property
    def is_diagonal(self) -> bool:
        return all(nk == 1 for nk in self.jordan_sizes)

    def offsets(self) -> List[int]:
        """Start index of each Jordan block in W."""
        return list(np.cumsum([0] + self.jordan_sizes[:-1]).astype(int))

    def trajectory(self, t: float, v0) -> np.ndarray:
        """v(t) = e^{St} v0."""
        return expm(self.S * t) @ np.asarray(v0, dtype=complex)

    def reference(self, t: float, v0) -> np.ndarray:
        """y_ref(t) = -F e^{St} v0."""
        return -self.F @ self.trajectory(t, v0)

    def with_disturbance(self, E=None, F=None) -> "Exosystem":
        return Exosystem(
            frequencies=self.frequencies,
            jordan_sizes=self.jordan_sizes,
            S=self.S,
            E=self.E if E is None else E,
            F=self.F if F is None else F,
        )


@dataclass(eq=False)
class Controller:
    """
    Error-feedback controller (G1, G2, K).

    Attributes:
        G1: nc x nc controller dynamics.
        G2: nc x p error injection.
        K: m x nc output map.
        family: Construction family name (e.g. "minimal").
        parameters: Construction parameters (epsilon, gains, ...), JSON-friendly.
    """

    G1: np.ndarray
    G2: np.ndarray
    K: np.ndarray
    family: str = "custom"
    parameters: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.G1 = as_matrix(self.G1, "G1")
        nc = self.G1.shape[0]
        if self.G1.shape != (nc, nc):
            raise DimensionError(f"G1 must be square, got shape {self.G1.shape}")
        self.G2 = _as_block(self.G2, "G2", rows=nc)
        self.K = _as_block(self.K, "K", cols=nc)

    @property
    def dimension(self) -> int:
        return self.G1.shape[0]

    @property
    def p(self) -> int:
        return self.G2.shape[1]

    @property
    def m(self) -> int:
        return self.K.shape[0]

    @property
    def is_real(self) -> bool:
        return all(_is_real_array(M) for M in (self.G1, self.G2, self.K))

    def check_against(self, plant: StateSpace) -> None:
        """Raise DimensionError naming the block that does not fit the plant."""
        if self.G2.shape[1] != plant.p:
            raise DimensionError(
                f"G2 has {self.G2.shape[1]} columns but the plant has {plant.p} outputs"
            )
        if self.K.shape[0] != plant.m:
            raise DimensionError(
                f"K has {self.K.shape[0]} rows but the plant has {plant.m} inputs"
            )


@dataclass(eq=False)
class ClosedLoop:
    """Assembled closed loop (Ae, Be, Ce, De); the first `plant_order` states are the plant's."""

    Ae: np.ndarray
    Be: np.ndarray
    Ce: np.ndarray
    De: np.ndarray
    plant_order: int = 0

    @property
    def order(self) -> int:
        return self.Ae.shape[0]

    @property
    def abscissa(self) -> float:
        return spectral_abscissa(self.Ae)

    @property
    def is_hurwitz(self) -> bool:
        return self.abscissa < 0


@dataclass(eq=False)
class PlantVariant:
    """A (possibly perturbed) plant together with its disturbance maps E, F."""

    plant: StateSpace
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.E = _as_block(self.E, "E", rows=self.plant.n)
        self.F = _as_block(self.F, "F", rows=self.plant.p)

    @classmethod
    def nominal(cls, plant: StateSpace, exo: Exosystem) -> "PlantVariant":
        return cls(plant=plant, E=exo.E, F=exo.F)

    def exosystem(self, exo: Exosystem) -> Exosystem:
        """The exosystem with this variant's E and F."""
        return exo.with_disturbance(E=self.E, F=self.F)

    def admissible(self, exo: Exosystem) -> bool:
        """True when every i*omega_k lies in the resolvent set of the perturbed A."""
        for w in exo.frequencies:
            try:
                Resolvent(self.plant.A, 1j * w)
            except ResolventSingularityError:
                return False
        return True


class Resolvent:
    """
    LU-factored (lambda I - A), reused for repeated solves.

    Raises:
        ResolventSingularityError: If lambda is numerically in sigma(A).
    """

    def __init__(self, A, lam: complex, frequency_index: Optional[int] = None):
        A = as_matrix(A, "A")
        n = A.shape[0]
        self.lam = complex(lam)
        self.n = n
        M = self.lam * np.eye(n) - A
        if n:
            sigma_min = np.linalg.svd(M, compute_uv=False)[-1]
            if sigma_min <= RESOLVENT_TOLERANCE * max(1.0, matrix_norm(A)):
                where = f" (frequency index {frequency_index})" if frequency_index is not None else ""
                raise ResolventSingularityError(
                    f"lambda={self.lam} is in the spectrum of A{where}: "
                    f"sigma_min={sigma_min:.3e}",
                    frequency_index=frequency_index,
                )
            self._lu = sla.lu_factor(M)
        else:
            self._lu = None

    def solve(self, rhs) -> np.ndarray:
        """(lambda I - A)^-1 rhs."""
        rhs = np.asarray(rhs)
        if self._lu is None:
            return np.zeros_like(rhs, dtype=complex)
        return sla.lu_solve(self._lu, rhs.astype(complex))

    def solve_left(self, lhs) -> np.ndarray:
        """lhs (lambda I - A)^-1."""
        lhs = np.asarray(lhs)
        if self._lu is None:
            return np.zeros_like(lhs, dtype=complex)
        # X M = lhs  <=>  M^T X^T = lhs^T
        return sla.lu_solve(self._lu, lhs.T.astype(complex), trans=1).T

    def power(self, rhs, k: int) -> np.ndarray:
        """(lambda I - A)^-k rhs."""
        out = np.asarray(rhs, dtype=complex)
        for _ in range(k):
            out = self.solve(out)
        return out


def transfer_eval(sys: StateSpace, lam: complex, frequency_index: Optional[int] = None) -> np.ndarray:
    """
    P(lambda) = C (lambda I - A)^-1 B + D, by LU solve.

    Raises:
        ResolventSingularityError: If lambda is numerically in sigma(A).
    """
    R = Resolvent(sys.A, lam, frequency_index)
    return sys.C @ R.solve(sys.B) + sys.D


def assemble_closed_loop(plant: StateSpace, ctrl: Controller, exo: Exosystem) -> ClosedLoop:
    """
    Closed loop of plant, error-feedback controller and exosystem.

        Ae = [[A, B K], [G2 C, G1 + G2 D K]]
        Be = [[E], [G2 F]]
        Ce = [C, D K]
        De = F
    """
    ctrl.check_against(plant)
    if exo.E.shape[0] != plant.n:
        raise DimensionError(f"E has {exo.E.shape[0]} rows but the plant has {plant.n} states")
    if exo.F.shape[0] != plant.p:
        raise DimensionError(f"F has {exo.F.shape[0]} rows but the plant has {plant.p} outputs")

    A, B, C, D = plant.A, plant.B, plant.C, plant.D
    G1, G2, K = ctrl.G1, ctrl.G2, ctrl.K
    Ae = np.block([[A, B @ K], [G2 @ C, G1 + G2 @ D @ K]])
    Be = np.vstack([exo.E, G2 @ exo.F])
    Ce = np.hstack([C, D @ K])
    De = exo.F.copy()
    return ClosedLoop(Ae=Ae, Be=Be, Ce=Ce, De=De, plant_order=plant.n)


def jordan_block(eigenvalue: complex, size: int, identity: Optional[np.ndarray] = None) -> np.ndarray:
    """Upper Jordan block of `size` diagonal blocks lam*I with I on the superdiagonal."""
    I = np.eye(1) if identity is None else identity
    d = I.shape[0]
    J = np.kron(np.eye(size), eigenvalue * I).astype(complex)
    if size > 1:
        J += np.kron(np.eye(size, k=1), I)
    return J.reshape(size * d, size * d)


def exosystem_from_frequencies(
    frequencies: Sequence[float],
    jordan_sizes: Sequence[int],
    E=None,
    F=None,
    state_dim: Optional[int] = None,
    output_dim: Optional[int] = None,
) -> Exosystem:
    """
    Build an exosystem with S = blockdiag(J(i*omega_k, n_k)).

    Args:
        frequencies: Distinct frequencies omega_k (rad/s).
        jordan_sizes: Jordan block sizes n_k >= 1.
        E: n x r disturbance input (zeros of size state_dim when omitted).
        F: p x r output disturbance (zeros of size output_dim when omitted).

    Raises:
        ValidationError: On duplicate frequencies or invalid sizes.
    """
    frequencies = [float(w) for w in frequencies]
    jordan_sizes = [int(s) for s in jordan_sizes]
    if len(set(frequencies)) != len(frequencies):
        raise ValidationError(f"frequencies must be distinct, got {frequencies}")
    if len(frequencies) != len(jordan_sizes):
        raise ValidationError("frequencies and jordan_sizes must have equal length")
    if any(s < 1 for s in jordan_sizes):
        raise ValidationError(f"Jordan sizes must be >= 1, got {jordan_sizes}")

    S = block_diag(*[jordan_block(1j * w, s) for w, s in zip(frequencies, jordan_sizes)])
    if np.all(S.imag == 0):
        S = S.real
    r = S.shape[0]
    if E is None:
        E = np.zeros((state_dim or 0, r))
    if F is None:
        F = np.zeros((output_dim or 0, r))
    return Exosystem(frequencies=frequencies, jordan_sizes=jordan_sizes, S=S, E=E, F=F)
