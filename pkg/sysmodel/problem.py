"""
Problem Loader
==============
Loads and validates regulation problem files (UTF-8 JSON).

Top-level keys:
    plant             "heat", {"heat": {"modes": N, "kappa": k}}, a path to a
                      plant JSON file, or an inline {"A", "B", "C", "D"} object
    exosystem         "heat", a path, or an inline exosystem object
    controller_family one of FAMILIES
    parameters        family parameters (epsilon, tune_epsilon, kappa, ...)
    simulation        {"t_final", "dt", "v0", "window"}
    perturbations     {"delta", "samples", "seed", "members": [...]}

Usage:
    problem = ProblemLoader("problems/scalar.json")
    print(problem.family, problem.parameters)
"""

import logging
import os
from typing import Any, Dict, List, Optional

from numerics.errors import ParseError
from sysmodel.serialization import (
    exosystem_from_dict,
    load_exosystem,
    load_state_space,
    matrix_from_json,
    read_json,
    state_space_from_dict,
)
from sysmodel.state_space import Exosystem, PlantVariant, StateSpace

logger = logging.getLogger(__name__)

FAMILIES = [
    "minimal", "minimal-real", "minimal-reduced",
    "triangular", "triangular-diag", "triangular-reduced",
    "observer", "observer-diag",
]


class ProblemLoader:
    """
    Loads a problem file and exposes its validated sections.

    The plant and exosystem sections stay as references until resolved:
    `plant_source` is "heat" (with `heat_options`) or "inline"/"file", and
    `load_plant()` returns the StateSpace for the latter two.
    """

    ALLOWED_KEYS = {
        "plant", "exosystem", "controller_family", "parameters",
        "simulation", "perturbations",
    }

    def __init__(self, filepath: str):
        """
        Args:
            filepath: Path to the problem JSON file.

        Raises:
            FileNotFoundError: If the file does not exist.
            ParseError: If the file fails schema validation.
        """
        if not os.path.exists(filepath):
            raise FileNotFoundError(f"Problem file not found: {filepath}")
        self.filepath = filepath
        self.base_dir = os.path.dirname(os.path.abspath(filepath))
        self._raw = read_json(filepath)
        if not isinstance(self._raw, dict):
            raise ParseError(f"problem must be a JSON object, got {type(self._raw).__name__}")
        unknown = set(self._raw) - self.ALLOWED_KEYS
        if unknown:
            raise ParseError(f"unknown top-level keys {sorted(unknown)}")
        self._validate()

    def _validate(self) -> None:
        family = self._raw.get("controller_family")
        if family is not None and family not in FAMILIES:
            raise ParseError(
                f"unknown family '{family}', expected one of {FAMILIES}",
                field="controller_family",
            )
        for key in ("parameters", "simulation", "perturbations"):
            value = self._raw.get(key, {})
            if not isinstance(value, dict):
                raise ParseError(f"must be an object, got {type(value).__name__}", field=key)
        if "plant" not in self._raw:
            raise ParseError("missing required key", field="plant")

    def _resolve_path(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    # ── Sections ──

    @property
    def family(self) -> Optional[str]:
        return self._raw.get("controller_family")

    @property
    def parameters(self) -> Dict[str, Any]:
        return dict(self._raw.get("parameters", {}))

    @property
    def simulation(self) -> Dict[str, Any]:
        return dict(self._raw.get("simulation", {}))

    @property
    def perturbations(self) -> Dict[str, Any]:
        return dict(self._raw.get("perturbations", {}))

    @property
    def plant_source(self) -> str:
        plant = self._raw["plant"]
        if plant == "heat" or (isinstance(plant, dict) and "heat" in plant):
            return "heat"
        if isinstance(plant, str):
            return "file"
        return "inline"

    @property
    def heat_options(self) -> Dict[str, Any]:
        plant = self._raw["plant"]
        if isinstance(plant, dict) and isinstance(plant.get("heat"), dict):
            return dict(plant["heat"])
        return {}

    @property
    def exosystem_source(self) -> str:
        exo = self._raw.get("exosystem")
        if exo is None or exo == "heat":
            return "heat"
        if isinstance(exo, str):
            return "file"
        return "inline"

    def load_plant(self) -> StateSpace:
        """Resolve a file or inline plant (heat plants are built by the caller)."""
        source = self.plant_source
        if source == "heat":
            raise ParseError("heat plants are built from heat_options, not loaded", field="plant")
        if source == "file":
            return load_state_space(self._resolve_path(self._raw["plant"]))
        return state_space_from_dict(self._raw["plant"], "plant")

    def load_exosystem(self) -> Exosystem:
        source = self.exosystem_source
        if source == "heat":
            raise ParseError("benchmark exosystem is built by the caller", field="exosystem")
        if source == "file":
            return load_exosystem(self._resolve_path(self._raw["exosystem"]))
        return exosystem_from_dict(self._raw["exosystem"], "exosystem")

    def load_members(self, nominal: StateSpace, exo: Exosystem) -> List[PlantVariant]:
        """
        Perturbation-class members for reduced-order designs.

        Each member overrides any of A, B, C, D, E, F of the nominal plant;
        the nominal plant itself is always the first member.
        """
        members = [PlantVariant.nominal(nominal, exo)]
        raw_members = self.perturbations.get("members", [])
        if not isinstance(raw_members, list):
            raise ParseError("must be a list", field="perturbations.members")
        for i, raw in enumerate(raw_members):
            if not isinstance(raw, dict):
                raise ParseError("member must be an object", field=f"perturbations.members[{i}]")
            ctx = f"perturbations.members[{i}]"
            mats = {
                key: matrix_from_json(raw[key], f"{ctx}.{key}")
                for key in ("A", "B", "C", "D", "E", "F") if key in raw
            }
            plant = nominal.with_matrices(**{k: v for k, v in mats.items() if k in "ABCD"})
            members.append(PlantVariant(
                plant=plant,
                E=mats.get("E", exo.E),
                F=mats.get("F", exo.F),
            ))
        logger.info(f"Loaded {len(members)} perturbation-class members")
        return members
