"""
JSON Serialization
==================
Matrix and model (de)serialization for the CLI file formats.

Matrices are nested row arrays. Real matrices use plain numbers; complex
matrices use [re, im] pairs for every entry. Floats are written with their
shortest round-trip repr, so re-serializing a loaded file is bit-identical.

Usage:
    data = state_space_to_dict(plant)
    plant = state_space_from_dict(data)
    write_json(path, data)
"""

import json
import logging
import os
from typing import Any, Dict, List

import numpy as np

from numerics.errors import DimensionError, ParseError, ValidationError
from sysmodel.state_space import Controller, Exosystem, StateSpace, exosystem_from_frequencies

logger = logging.getLogger(__name__)


def matrix_to_json(M) -> List[List[Any]]:
    """Encode a matrix as nested rows (plain floats, or [re, im] pairs when complex)."""
    M = np.asarray(M)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if np.iscomplexobj(M):
        return [[[float(z.real), float(z.imag)] for z in row] for row in M]
    return [[float(x) for x in row] for row in M]


def _entry(value: Any, field: str) -> complex:
    if isinstance(value, bool):
        raise ParseError("booleans are not valid matrix entries", field=field)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, list) and len(value) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in value
    ):
        return complex(value[0], value[1])
    raise ParseError(f"expected a number or [re, im] pair, got {value!r}", field=field)


def matrix_from_json(data: Any, field: str = "matrix") -> np.ndarray:
    """
    Decode a matrix written by matrix_to_json.

    Raises:
        ParseError: On ragged rows or invalid entries; the message names the field path.
    """
    if not isinstance(data, list):
        raise ParseError(f"expected a list of rows, got {type(data).__name__}", field=field)
    if not data:
        return np.zeros((0, 0))
    rows = []
    width = None
    is_complex = False
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise ParseError("each row must be a list", field=f"{field}[{i}]")
        values = [_entry(x, f"{field}[{i}][{j}]") for j, x in enumerate(row)]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(
                f"ragged matrix: row {i} has {len(values)} entries, expected {width}",
                field=field,
            )
        is_complex = is_complex or any(isinstance(x, complex) for x in values)
        rows.append(values)
    dtype = complex if is_complex else float
    return np.array(rows, dtype=dtype).reshape(len(rows), width or 0)


def _require(data: Dict[str, Any], key: str, context: str) -> Any:
    if not isinstance(data, dict):
        raise ParseError(f"expected an object, got {type(data).__name__}", field=context)
    if key not in data:
        raise ParseError("missing required key", field=f"{context}.{key}" if context else key)
    return data[key]


def state_space_to_dict(sys: StateSpace) -> Dict[str, Any]:
    data = {
        "A": matrix_to_json(sys.A),
        "B": matrix_to_json(sys.B),
        "C": matrix_to_json(sys.C),
        "D": matrix_to_json(sys.D),
    }
    labels = {
        k: v for k, v in (
            ("states", sys.state_labels),
            ("inputs", sys.input_labels),
            ("outputs", sys.output_labels),
        ) if v is not None
    }
    if labels:
        data["labels"] = labels
    return data


def state_space_from_dict(data: Dict[str, Any], context: str = "plant") -> StateSpace:
    mats = {
        key: matrix_from_json(_require(data, key, context), f"{context}.{key}")
        for key in ("A", "B", "C", "D")
    }
    labels = data.get("labels", {}) or {}
    try:
        return StateSpace(
            **mats,
            state_labels=labels.get("states"),
            input_labels=labels.get("inputs"),
            output_labels=labels.get("outputs"),
        )
    except DimensionError as exc:
        raise ParseError(str(exc), field=context) from exc


def exosystem_to_dict(exo: Exosystem) -> Dict[str, Any]:
    return {
        "frequencies": [float(w) for w in exo.frequencies],
        "jordan_sizes": [int(s) for s in exo.jordan_sizes],
        "S": matrix_to_json(exo.S),
        "E": matrix_to_json(exo.E),
        "F": matrix_to_json(exo.F),
    }


def exosystem_from_dict(data: Dict[str, Any], context: str = "exosystem") -> Exosystem:
    """
    Decode an exosystem. S may be omitted, in which case it is rebuilt from
    the frequencies and Jordan sizes.
    """
    freqs = _require(data, "frequencies", context)
    sizes = data.get("jordan_sizes", [1] * len(freqs) if isinstance(freqs, list) else None)
    if not isinstance(freqs, list) or not isinstance(sizes, list):
        raise ParseError("frequencies and jordan_sizes must be lists", field=context)
    E = matrix_from_json(_require(data, "E", context), f"{context}.E")
    F = matrix_from_json(_require(data, "F", context), f"{context}.F")
    try:
        if "S" in data:
            S = matrix_from_json(data["S"], f"{context}.S")
            return Exosystem(frequencies=freqs, jordan_sizes=sizes, S=S, E=E, F=F)
        return exosystem_from_frequencies(freqs, sizes, E=E, F=F)
    except (DimensionError, ValidationError) as exc:
        raise ParseError(str(exc), field=context) from exc


def controller_to_dict(ctrl: Controller) -> Dict[str, Any]:
    return {
        "family": ctrl.family,
        "parameters": ctrl.parameters,
        "G1": matrix_to_json(ctrl.G1),
        "G2": matrix_to_json(ctrl.G2),
        "K": matrix_to_json(ctrl.K),
    }


def controller_from_dict(data: Dict[str, Any], context: str = "controller") -> Controller:
    if isinstance(data, dict) and "controller" in data and "G1" not in data:
        data = data["controller"]
        context = f"{context}.controller"
    mats = {
        key: matrix_from_json(_require(data, key, context), f"{context}.{key}")
        for key in ("G1", "G2", "K")
    }
    try:
        return Controller(
            **mats,
            family=data.get("family", "custom"),
            parameters=data.get("parameters", {}) or {},
        )
    except DimensionError as exc:
        raise ParseError(str(exc), field=context) from exc


def read_json(filepath: str) -> Any:
    """
    Load a UTF-8 JSON file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ParseError: On malformed JSON, with the offending line.
    """
    if not os.path.exists(filepath):
        raise FileNotFoundError(f"File not found: {filepath}")
    with open(filepath, "r", encoding="utf-8") as f:
        text = f.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {filepath}: {exc.msg}", line=exc.lineno) from exc


def write_json(filepath: str, data: Any) -> str:
    """Write deterministic, indented JSON and return the path."""
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(filepath, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False, allow_nan=False)
        f.write("\n")
    logger.info(f"Wrote {filepath}")
    return filepath


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def load_state_space(filepath: str) -> StateSpace:
    data = read_json(filepath)
    if isinstance(data, dict) and "plant" in data and "A" not in data:
        return state_space_from_dict(data["plant"], "plant")
    return state_space_from_dict(data, "plant")


def load_exosystem(filepath: str) -> Exosystem:
    data = read_json(filepath)
    if isinstance(data, dict) and "exosystem" in data and "frequencies" not in data:
        return exosystem_from_dict(data["exosystem"], "exosystem")
    return exosystem_from_dict(data, "exosystem")


def load_controller(filepath: str) -> Controller:
    return controller_from_dict(read_json(filepath))
