import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Union

import jsonschema
import numpy as np

from PhotonicProtocols.models.adaptive_sampling import AdaptivePlan
from PhotonicProtocols.models.exceptions import InvalidFile
from PhotonicProtocols.models.faux_protocols import ProtocolStep
from PhotonicProtocols.models.fock_state import FockState
from PhotonicProtocols.models.linear_optics import Interferometer
from PhotonicProtocols.models.povm import Povm

PathLike = Union[str, Path]

COMPLEX_ENTRY = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": COMPLEX_ENTRY},
}

MODE_LIST = {"type": "array", "items": {"type": "integer", "minimum": 0}}

MATRIX_SCHEMA = {
    "type": "object",
    "properties": {"matrix": MATRIX},
    "required": ["matrix"],
    "additionalProperties": False,
}

INTERFEROMETER_SCHEMA = {
    "type": "object",
    "properties": {
        "matrix": MATRIX,
        "target_modes": MODE_LIST,
        "name": {"type": "string"},
    },
    "required": ["matrix"],
    "additionalProperties": False,
}

PLAN_SCHEMA = {
    "type": "object",
    "properties": {
        "K": {"type": "integer", "minimum": 1},
        "unitaries": {"type": "array", "minItems": 1, "items": MATRIX},
    },
    "required": ["K", "unitaries"],
    "additionalProperties": False,
}

SCHEDULE_SCHEMA = {
    "$defs": {
        "step": {
            "type": "object",
            "properties": {
                "matrix": MATRIX,
                "target_modes": MODE_LIST,
                "detect": MODE_LIST,
                "name": {"type": "string"},
                "adaptivity": {
                    "type": "object",
                    "additionalProperties": {"$ref": "#/$defs/step"},
                },
            },
            "required": ["matrix"],
            "additionalProperties": False,
        }
    },
    "type": "object",
    "properties": {"steps": {"type": "array", "items": {"$ref": "#/$defs/step"}}},
    "required": ["steps"],
    "additionalProperties": False,
}

POVM_SCHEMA = {
    "type": "object",
    "properties": {
        "num_modes": {"type": "integer", "minimum": 1},
        "max_photons": {"enum": [1, 2]},
        "elements": {"type": "array", "minItems": 1, "items": MATRIX},
    },
    "required": ["num_modes", "elements"],
    "additionalProperties": False,
}

STATE_RECORD_SCHEMA = {
    "type": "object",
    "properties": {
        "occ": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "amp": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    },
    "required": ["occ", "amp"],
    "additionalProperties": False,
}


def validated(document: Any, schema: Dict[str, Any], source: str = "document") -> Any:
    """Raises InvalidFile unless document satisfies schema."""
    try:
        jsonschema.validate(document, schema)
    except jsonschema.ValidationError as error:
        raise InvalidFile(f"{source}: {error.message}") from error
    return document


def read_json(path: PathLike, schema: Dict[str, Any]) -> Any:
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as error:
        raise InvalidFile(f"Cannot read {path}: {error}") from error
    logging.debug(f"Loaded {path}.")
    return validated(document, schema, str(path))


def matrix_from_json(rows: List[List[Any]]) -> np.ndarray:
    """Row-major entries, each a real number or an [re, im] pair."""
    widths = {len(row) for row in rows}
    if len(widths) != 1:
        raise InvalidFile(f"Ragged matrix with row lengths {sorted(widths)}.")
    return np.array(
        [
            [complex(*entry) if isinstance(entry, list) else complex(entry) for entry in row]
            for row in rows
        ],
        dtype=complex,
    )


def matrix_to_json(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(matrix)]


def load_matrix(path: PathLike) -> np.ndarray:
    return matrix_from_json(read_json(path, MATRIX_SCHEMA)["matrix"])


def load_interferometer(path: PathLike) -> Interferometer:
    document = read_json(path, INTERFEROMETER_SCHEMA)
    return Interferometer(
        matrix_from_json(document["matrix"]),
        document.get("target_modes"),
        document.get("name", Path(path).stem),
    )


def load_plan(path: PathLike) -> AdaptivePlan:
    document = read_json(path, PLAN_SCHEMA)
    return AdaptivePlan(
        document["K"], tuple(matrix_from_json(rows) for rows in document["unitaries"])
    )


def dump_plan(plan: AdaptivePlan, path: PathLike) -> None:
    document = {"K": plan.num_parties, "unitaries": plan.to_records()}
    Path(path).write_text(json.dumps(document, sort_keys=True, indent=2), encoding="utf-8")


def _step_from_json(document: Dict[str, Any], index: int) -> ProtocolStep:
    rules = {
        prefix: _step_from_json(override, index)
        for prefix, override in document.get("adaptivity", {}).items()
    }
    return ProtocolStep(
        Interferometer(
            matrix_from_json(document["matrix"]),
            document.get("target_modes"),
            document.get("name", f"step{index}"),
        ),
        tuple(document.get("detect", ())),
        rules,
    )


def load_schedule(path: PathLike) -> List[ProtocolStep]:
    document = read_json(path, SCHEDULE_SCHEMA)
    return [_step_from_json(step, index) for index, step in enumerate(document["steps"])]


def load_povm(path: PathLike) -> Povm:
    document = read_json(path, POVM_SCHEMA)
    return Povm(
        [matrix_from_json(rows) for rows in document["elements"]],
        document["num_modes"],
        document.get("max_photons", 2),
    )


def write_state_jsonl(state: FockState, path: PathLike) -> None:
    """One JSON object per basis term: {"occ": [...], "amp": [re, im]}."""
    lines = [json.dumps(record, sort_keys=True) for record in state.to_records()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_state_jsonl(path: PathLike, num_modes: int = None) -> FockState:
    records: Iterable[Dict[str, Any]] = []
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
        records = [json.loads(line) for line in lines if line.strip()]
    except (OSError, json.JSONDecodeError) as error:
        raise InvalidFile(f"Cannot read {path}: {error}") from error
    for number, record in enumerate(records, start=1):
        validated(record, STATE_RECORD_SCHEMA, f"{path}:{number}")
    return FockState.from_records(records, num_modes)
