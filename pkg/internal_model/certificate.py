"""
Regulation Certificates
=======================
Combines closed-loop stability with the internal model checks.

A controller that stabilizes the closed loop and satisfies the G-conditions
(equivalently, for finite p, contains a p-copy internal model) solves the
robust output regulation problem. `regulation_residual` additionally solves
the regulator equation of the nominal loop, giving the steady-state error
gain that must vanish.

Usage:
    cert = certify_rorp(plant, controller, exo)
    print(cert.summary())
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from internal_model.builders import InternalModelSpec
from internal_model.conditions import (
    GConditionsReport,
    PCopyReport,
    check_g_conditions,
    check_p_copy,
)
from numerics.equations import sylvester_generic
from numerics.errors import NumericalError
from numerics.linalg import RankTolerance, matrix_norm, spectral_abscissa
from sysmodel.state_space import (
    ClosedLoop,
    Controller,
    Exosystem,
    PlantVariant,
    StateSpace,
    assemble_closed_loop,
)

logger = logging.getLogger(__name__)

REGULATION_TOLERANCE = 1e-6


def regulation_residual(cl: ClosedLoop, exo: Exosystem) -> float:
    """
    Steady-state error gain ||Ce Sigma + De|| / (||Ce|| ||Sigma|| + ||De|| + 1)
    where Sigma S = Ae Sigma + Be.

    Returns nan when Ae shares an eigenvalue with S.
    """
    try:
        Sigma = sylvester_generic(cl.Ae, exo.S, cl.Be)
    except NumericalError:
        return float("nan")
    gain = cl.Ce @ Sigma + cl.De
    scale = matrix_norm(cl.Ce) * matrix_norm(Sigma) + matrix_norm(cl.De) + 1.0
    return matrix_norm(gain) / scale


@dataclass
class RorpCertificate:
    """
    Outcome of certify_rorp.

    `solves_rorp` is the conjunction of the closed-loop stability and the
    internal model checks. `regulation_residual` is informational.
    """

    hurwitz: bool
    abscissa: float
    g_conditions: bool
    p_copy: bool
    regulation_residual: float
    g_report: Optional[GConditionsReport] = None
    p_copy_report: Optional[PCopyReport] = None
    family: str = ""

    @property
    def solves_rorp(self) -> bool:
        return self.hurwitz and self.g_conditions and self.p_copy

    @property
    def regulates(self) -> bool:
        return self.hurwitz and self.regulation_residual <= REGULATION_TOLERANCE

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family,
            "hurwitz": self.hurwitz,
            "abscissa": self.abscissa,
            "g_conditions": self.g_conditions,
            "p_copy": self.p_copy,
            "solves_rorp": self.solves_rorp,
            "regulation_residual": None if np.isnan(self.regulation_residual) else self.regulation_residual,
            "g_report": self.g_report.to_dict() if self.g_report else None,
            "p_copy_report": self.p_copy_report.to_dict() if self.p_copy_report else None,
        }

    def summary(self) -> str:
        lines = [
            "═══ Regulation Certificate ═══",
            f"Family:               {self.family or 'n/a'}",
            f"Closed loop Hurwitz:  {self.hurwitz} (abscissa {self.abscissa:.4e})",
            f"G-conditions:         {self.g_conditions}",
            f"p-copy internal model: {self.p_copy}",
            f"Steady-state residual: {self.regulation_residual:.3e}",
            f"Solves RORP:          {self.solves_rorp}",
            "══════════════════════════════",
        ]
        if self.g_report and not self.g_report.passed:
            lines.insert(-1, f"Failed: {', '.join(self.g_report.failures())}")
        return "\n".join(lines)


def certify_rorp(
    plant: StateSpace,
    ctrl: Controller,
    exo: Exosystem,
    tol: RankTolerance = RankTolerance(),
) -> RorpCertificate:
    """Closed-loop Hurwitz test + G-conditions + p-copy check."""
    spec = InternalModelSpec.from_exosystem(exo, plant.p)
    cl = assemble_closed_loop(plant, ctrl, exo)
    abscissa = spectral_abscissa(cl.Ae)
    hurwitz = abscissa < 0
    g_report = check_g_conditions(ctrl.G1, ctrl.G2, spec, tol)
    p_report = check_p_copy(ctrl.G1, spec, tol)
    residual = regulation_residual(cl, exo) if hurwitz else float("nan")

    if g_report.passed != p_report.passed:
        logger.warning(
            f"G-conditions ({g_report.passed}) and p-copy ({p_report.passed}) disagree; "
            f"rank gap {g_report.max_rank_gap:.2e}"
        )

    cert = RorpCertificate(
        hurwitz=hurwitz,
        abscissa=abscissa,
        g_conditions=g_report.passed,
        p_copy=p_report.passed,
        regulation_residual=residual,
        g_report=g_report,
        p_copy_report=p_report,
        family=ctrl.family,
    )
    logger.info(
        f"Certificate [{ctrl.family}]: hurwitz={hurwitz} (abscissa {abscissa:.3e}), "
        f"G-conditions={g_report.passed}, p-copy={p_report.passed}"
    )
    return cert


@dataclass
class MemberCheck:
    index: int
    hurwitz: bool
    abscissa: float
    regulation_residual: float

    @property
    def tracks(self) -> bool:
        return self.hurwitz and self.regulation_residual <= REGULATION_TOLERANCE


@dataclass
class ClassCertificate:
    """Per-member stability and steady-state checks for a finite perturbation class."""

    members: List[MemberCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.members) and all(m.tracks for m in self.members)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "members": [
                {
                    "index": m.index,
                    "hurwitz": m.hurwitz,
                    "abscissa": m.abscissa,
                    "regulation_residual": None if np.isnan(m.regulation_residual) else m.regulation_residual,
                    "tracks": m.tracks,
                }
                for m in self.members
            ],
        }


def certify_class(members: Sequence[PlantVariant], ctrl: Controller, exo: Exosystem) -> ClassCertificate:
    """Check every member of a finite class: Hurwitz closed loop and zero steady-state gain."""
    cert = ClassCertificate()
    for i, member in enumerate(members):
        member_exo = member.exosystem(exo)
        cl = assemble_closed_loop(member.plant, ctrl, member_exo)
        abscissa = spectral_abscissa(cl.Ae)
        residual = regulation_residual(cl, member_exo) if abscissa < 0 else float("nan")
        cert.members.append(MemberCheck(i, abscissa < 0, abscissa, residual))
    logger.info(
        f"Class certificate: {sum(m.tracks for m in cert.members)}/{len(cert.members)} members regulated"
    )
    return cert
