"""
Controller Factory
==================
Creates a controller of the requested family from a plant, an exosystem and
the family parameters of a problem file or config.yaml.

Usage:
    ctrl, record = create_controller("observer", plant, exo, {})
    ctrl, _ = create_controller("minimal", plant, exo, {"tune_epsilon": True})
"""

import logging
from typing import Any, Callable, Dict, Optional, Sequence, Tuple

from controllers.minimal import minimal_controller, minimal_controller_real, tune_epsilon
from controllers.observer import observer_controller, observer_controller_diag
from controllers.reduced import reduced_order_minimal_controller
from controllers.triangular import (
    triangular_controller,
    triangular_controller_diag,
    triangular_controller_reduced,
)
from numerics.errors import PreconditionError
from numerics.linalg import RankTolerance
from sysmodel.problem import FAMILIES
from sysmodel.state_space import Controller, Exosystem, PlantVariant, StateSpace

logger = logging.getLogger(__name__)

REDUCED_FAMILIES = {"minimal-reduced", "triangular-reduced"}


def resolve_epsilon(
    plant: StateSpace,
    exo: Exosystem,
    params: Dict[str, Any],
    tol: RankTolerance = RankTolerance(),
    builder: Optional[Callable[[float], Controller]] = None,
) -> float:
    """
    Fixed `epsilon`, or the tuned value when `tune_epsilon` is set (default 0.1).

    `builder` selects the family searched over; the complex minimal
    controller when omitted.
    """
    if params.get("tune_epsilon"):
        return tune_epsilon(
            plant,
            exo,
            eps_max=float(params.get("eps_max", 1.0)),
            refinement=int(params.get("refinement", 20)),
            workers=int(params.get("workers", 1)),
            tol=tol,
            builder=builder,
        )
    return float(params.get("epsilon", 0.1))


def create_controller(
    family: str,
    plant: StateSpace,
    exo: Exosystem,
    params: Optional[Dict[str, Any]] = None,
    members: Optional[Sequence[PlantVariant]] = None,
    tol: RankTolerance = RankTolerance(),
) -> Tuple[Controller, Optional[Any]]:
    """
    Create a controller of the given family.

    Args:
        family: One of FAMILIES.
        plant: Nominal plant (pre-stabilized for the minimal families).
        exo: Exosystem.
        params: Family parameters. Recognized keys:
            epsilon, tune_epsilon, eps_max, refinement, workers   (minimal*)
            k1_choice                                              (triangular*)
            g2_choice                                              (observer-diag)
        members: Perturbation class for the reduced families; the nominal
            plant alone when omitted.
        tol: Rank tolerance for every rank decision of the synthesis.

    Returns:
        (Controller, synthesis record or None)

    Raises:
        PreconditionError: If the family is not recognized.
    """
    params = dict(params or {})
    family = family.lower()
    if family not in FAMILIES:
        raise PreconditionError(
            f"Unknown controller family: '{family}'. Supported families: {', '.join(FAMILIES)}"
        )
    if family in REDUCED_FAMILIES and not members:
        members = [PlantVariant.nominal(plant, exo)]

    record = None
    if family == "minimal":
        ctrl = minimal_controller(plant, exo, resolve_epsilon(plant, exo, params, tol), tol=tol)
    elif family == "minimal-real":
        def build_real(eps: float) -> Controller:
            return minimal_controller_real(plant, exo, eps, tol=tol)

        ctrl = build_real(resolve_epsilon(plant, exo, params, tol, builder=build_real))
    elif family == "minimal-reduced":
        def build_reduced(eps: float) -> Controller:
            return reduced_order_minimal_controller(plant, exo, members, eps, tol=tol)

        ctrl = build_reduced(resolve_epsilon(plant, exo, params, tol, builder=build_reduced))
    elif family == "triangular":
        ctrl, record = triangular_controller(
            plant, exo, k1_choice=params.get("k1_choice", "pseudoinverse"), tol=tol
        )
    elif family == "triangular-diag":
        ctrl, record = triangular_controller_diag(
            plant, exo, k1_choice=params.get("k1_choice", "pl-pseudoinverse"), tol=tol
        )
    elif family == "triangular-reduced":
        ctrl, record = triangular_controller_reduced(plant, exo, members, tol=tol)
    elif family == "observer":
        ctrl, record = observer_controller(plant, exo, tol=tol)
    else:
        ctrl, record = observer_controller_diag(
            plant, exo, g2_choice=params.get("g2_choice", "inverse-transfer"), tol=tol
        )

    logger.info(f"Created {family} controller of dimension {ctrl.dimension}")
    return ctrl, record
