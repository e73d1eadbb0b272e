import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from PhotonicProtocols.constants import (
    DATA_DIRECTORY,
    FAUX_CHECK_MAX_MODES,
    FAUX_CHECK_MAX_PHOTONS,
    RNG_FAMILY,
    SAMPLE_MATRIX_PATH,
    VERSION,
)
from PhotonicProtocols.models.exceptions import InvalidConfiguration
from PhotonicProtocols.models.file_formats import read_json

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ParamSpec:
    kind: type
    default: Any
    minimum: Optional[float] = None
    maximum: Optional[float] = None
    choices: Optional[Tuple[str, ...]] = None
    help: str = ""


COMMAND_PARAMS: Dict[str, Dict[str, ParamSpec]] = {
    "bell": {
        "K": ParamSpec(int, 16, 4, 4096, help="Number of parties, even."),
        "trials": ParamSpec(int, 100_000, 1, 10**8, help="Monte Carlo trials."),
        "baseline_trials": ParamSpec(int, 1000, 1, 10**8, help="Two-lab baseline trials."),
    },
    "bleed-analytic": {},
    "bleed-seq": {
        "K": ParamSpec(int, 32, 8, 4096, help="Number of parties."),
        "trials": ParamSpec(int, 10_000, 1, 10**8, help="Monte Carlo trials."),
        "exact_K": ParamSpec(int, 8, 8, 16, help="Parties in the enumerated small case."),
    },
    "faux-check": {
        "N": ParamSpec(int, 2, 1, FAUX_CHECK_MAX_PHOTONS, help="Photons."),
        "M": ParamSpec(int, 2, 1, FAUX_CHECK_MAX_MODES, help="Modes."),
        "protocols": ParamSpec(int, 20, 1, 10_000, help="Random protocols to check."),
        "stages": ParamSpec(int, 2, 1, 8, help="Stages per random protocol."),
        "trials": ParamSpec(int, 0, 0, 10**6, help="Sampled faux runs per protocol."),
        "schedule": ParamSpec(str, None, help="JSON schedule to check instead."),
    },
    "sample": {
        "N": ParamSpec(int, 2, 1, 12, help="Photons."),
        "K": ParamSpec(int, 6, 1, 4096, help="Parties."),
        "trials": ParamSpec(int, 0, 0, 10**8, help="Sampled runs."),
        "crosscheck": ParamSpec(bool, False, help="Run the exact distribution crosscheck."),
        "exhaustive": ParamSpec(bool, True, help="Crosscheck on the full state vector."),
        "norm_trials": ParamSpec(int, 0, 0, 10**6, help="Trials of the norm demo."),
        "plan": ParamSpec(str, None, help="JSON plan file."),
    },
    "permanent": {
        "matrix": ParamSpec(str, str(SAMPLE_MATRIX_PATH), help="JSON matrix file."),
        "method": ParamSpec(str, "glynn", choices=("glynn", "bruteforce", "gurvits")),
        "epsilon": ParamSpec(float, 0.1, 1e-6, 0.999999, help="Gurvits additive error."),
        "delta": ParamSpec(float, 0.05, 1e-9, 0.999999, help="Gurvits failure probability."),
    },
    "povm-check": {
        "povm": ParamSpec(str, None, help="JSON POVM file; built-in examples if absent."),
        "tol": ParamSpec(float, 1e-8, 0.0, 1.0, help="Eigenvalue gap tolerance."),
    },
    "wstate-fidelity": {
        "copies": ParamSpec(str, "2,3", help="Comma-separated N values, K = N^3."),
        "heralded": ParamSpec(str, "2,3,4,8", help="Comma-separated K values."),
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "command": {"enum": sorted(COMMAND_PARAMS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": MAX_SEED},
        "output": {"type": "string"},
        "csv": {"type": "string"},
        "timing": {"type": "boolean"},
        "params": {"type": "object"},
    },
    "additionalProperties": False,
}


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    return read_json(path, CONFIG_SCHEMA)


def resolve_data_path(name: str) -> Path:
    """Paths are taken as given, falling back to the bundled data folder."""
    path = Path(name)
    if not path.exists() and (DATA_DIRECTORY / path.name).exists():
        return DATA_DIRECTORY / path.name
    return path


def parse_int_list(text: str, minimum: int, maximum: int, name: str) -> List[int]:
    try:
        values = [int(part) for part in str(text).split(",") if part.strip()]
    except ValueError as error:
        raise InvalidConfiguration(f"{name} must be comma-separated integers.") from error
    if not values or any(v < minimum or v > maximum for v in values):
        raise InvalidConfiguration(f"{name} entries must lie in [{minimum}, {maximum}].")
    return values


def _checked_value(command: str, name: str, spec: ParamSpec, value: Any) -> Any:
    if value is None:
        return None
    if spec.kind is bool:
        if not isinstance(value, bool):
            raise InvalidConfiguration(f"{command}: {name} must be true or false.")
    elif spec.kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise InvalidConfiguration(f"{command}: {name} must be an integer.")
    elif spec.kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidConfiguration(f"{command}: {name} must be a number.")
        value = float(value)
    elif not isinstance(value, str):
        raise InvalidConfiguration(f"{command}: {name} must be a string.")
    if spec.minimum is not None and value < spec.minimum:
        raise InvalidConfiguration(f"{command}: {name}={value} is below {spec.minimum}.")
    if spec.maximum is not None and value > spec.maximum:
        raise InvalidConfiguration(f"{command}: {name}={value} is above {spec.maximum}.")
    if spec.choices is not None and value not in spec.choices:
        raise InvalidConfiguration(f"{command}: {name} must be one of {list(spec.choices)}.")
    return value


def _cross_checks(command: str, params: Dict[str, Any]) -> None:
    if command == "bell" and params["K"] % 2:
        raise InvalidConfiguration(f"bell: K must be even, got {params['K']}.")
    if command == "faux-check" and params["M"] < params["N"]:
        raise InvalidConfiguration("faux-check: M must be at least N.")
    if command == "sample" and params["K"] < params["N"]:
        raise InvalidConfiguration("sample: K must be at least N.")
    if command == "wstate-fidelity":
        parse_int_list(params["copies"], 1, 3, "copies")
        parse_int_list(params["heralded"], 1, 64, "heralded")


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated run request: command, parameters with defaults filled
    in, seed and output locations."""

    command: str
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0
    output_path: Optional[str] = None
    csv_path: Optional[str] = None
    timing: bool = False

    @classmethod
    def create(
        cls,
        command: str,
        params: Optional[Mapping[str, Any]] = None,
        seed: Optional[int] = None,
        output_path: Optional[str] = None,
        csv_path: Optional[str] = None,
        timing: Optional[bool] = None,
    ) -> "ExperimentConfig":
        """Validates params against the command's ranges.

        Raises:
            InvalidConfiguration: For an unknown command or key, a value
                of the wrong type or outside its range.
        """
        if command not in COMMAND_PARAMS:
            raise InvalidConfiguration(f"Unknown command {command!r}.")
        specs = COMMAND_PARAMS[command]
        params = dict(params or {})
        unknown = sorted(set(params) - set(specs))
        if unknown:
            raise InvalidConfiguration(f"{command}: unknown parameters {unknown}.")
        resolved = {}
        for name, spec in specs.items():
            value = _checked_value(command, name, spec, params.get(name))
            resolved[name] = spec.default if value is None else value
        _cross_checks(command, resolved)
        seed = 0 if seed is None else seed
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
            raise InvalidConfiguration(f"Seed must be an unsigned 64-bit integer, got {seed}.")
        logging.debug(f"Configured {command} with {resolved}, seed {seed}.")
        return cls(command, resolved, seed, output_path, csv_path, bool(timing))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "command": self.command,
            "params": dict(self.params),
            "seed": self.seed,
        }


def _json_default(value: Any) -> Any:
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"{type(value).__name__} is not JSON serializable.")


@dataclass
class RunReport:
    """Results of one run plus the pass/fail criteria that set the exit
    code."""

    config: ExperimentConfig
    results: Dict[str, Any]
    criteria: Dict[str, bool]
    wall_clock_ms: Optional[float] = None
    table: Optional[List[Dict[str, Any]]] = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(self.criteria.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> Dict[str, Any]:
        document = {
            "config": self.config.to_dict(),
            "version": VERSION,
            "rng": RNG_FAMILY,
            "results": self.results,
            "criteria": {name: bool(value) for name, value in self.criteria.items()},
            "passed": self.passed,
        }
        if self.wall_clock_ms is not None:
            document["wall_clock_ms"] = self.wall_clock_ms
        return document

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)
