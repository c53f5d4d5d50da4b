"""Scenario files (JSON), schema validation and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import jsonschema

from .model import Battery, Harvest, Scenario
from .solver import SolverConfig

__all__ = ["SCENARIO_SCHEMA", "SWEEP_SCHEMA", "SchemaError", "load_scenario", "scenario_from_dict",
           "scenario_to_dict", "fmt", "write_csv"]

_num = {"type": "number"}
_nonneg = {"type": "number", "minimum": 0}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["n_slots", "gains", "variances", "energy"],
    "additionalProperties": False,
    "properties": {
        "n_slots": {"type": "integer", "minimum": 1},
        "gains": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "variances": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "energy": {
            "oneOf": [
                {"type": "object", "required": ["battery"], "additionalProperties": False,
                 "properties": {"battery": _nonneg}},
                {"type": "object", "required": ["harvest"], "additionalProperties": False,
                 "properties": {"harvest": {"type": "array", "items": _nonneg}}},
            ]
        },
        "b_max": {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                            {"type": "string", "enum": ["inf", "Infinity"]}]},
        "delay": {"type": "integer", "minimum": 1},
        "eps_p": _nonneg,
        "eps_s": _nonneg,
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol_gap": {"type": "number", "exclusiveMinimum": 0},
                "tol_feas": {"type": "number", "exclusiveMinimum": 0},
                "max_newton": {"type": "integer", "minimum": 1},
                "barrier_mu": {"type": "number", "exclusiveMinimum": 1},
                "theta_floor": {"type": "number", "exclusiveMinimum": 0},
                "phi_floor": {"type": "number", "exclusiveMinimum": 0},
                "t_init": {"type": "number", "exclusiveMinimum": 0},
                "snap_factor": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "required": ["parameter"],
    "additionalProperties": False,
    "properties": {
        "parameter": {"enum": ["b_max", "delay", "energy", "eps_p", "eps_s"]},
        "grid": {"type": "array", "minItems": 1,
                 "items": {"oneOf": [_num, {"enum": ["inf", "Infinity"]}]}},
        "range": {"type": "array", "items": _num, "minItems": 3, "maxItems": 3},
        "variants": {"type": "array", "items": {"type": "object"}},
    },
    "oneOf": [{"required": ["grid"]}, {"required": ["range"]}],
}


class SchemaError(ValueError):
    """Input document does not match the schema; ``path`` locates the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


def _validate(doc, schema):
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path)
        raise SchemaError(path, e.message)


def _buffer(v) -> float:
    if v is None or (isinstance(v, str) and v.lower() in ("inf", "infinity")):
        return math.inf
    return float(v)


def scenario_from_dict(doc: dict) -> Tuple[Scenario, SolverConfig]:
    _validate(doc, SCENARIO_SCHEMA)
    n = doc["n_slots"]
    for key in ("gains", "variances"):
        if len(doc[key]) != n:
            raise SchemaError(key, f"expected {n} entries, got {len(doc[key])}")
    en = doc["energy"]
    if "battery" in en:
        energy = Battery(float(en["battery"]))
    else:
        if len(en["harvest"]) != n:
            raise SchemaError("energy/harvest", f"expected {n} entries, got {len(en['harvest'])}")
        energy = Harvest(tuple(en["harvest"]))
    delay = doc.get("delay", 1)
    if delay > n:
        raise SchemaError("delay", f"must not exceed n_slots={n}")
    try:
        s = Scenario(tuple(doc["gains"]), tuple(doc["variances"]), energy,
                     _buffer(doc.get("b_max")), delay,
                     float(doc.get("eps_p", 0.0)), float(doc.get("eps_s", 0.0)))
        cfg = SolverConfig.from_dict(doc.get("solver"))
    except (ValueError, TypeError) as exc:
        raise SchemaError("", str(exc)) from exc
    return s, cfg


def scenario_to_dict(s: Scenario) -> dict:
    en = ({"harvest": list(s.energy.arrivals)} if s.harvesting
          else {"battery": s.energy.energy})
    return {
        "n_slots": s.n_slots,
        "gains": list(s.gains),
        "variances": list(s.variances),
        "energy": en,
        "b_max": s.buffer_max if s.finite_buffer else "inf",
        "delay": s.delay,
        "eps_p": s.proc_cost,
        "eps_s": s.samp_cost,
    }


def load_json(path: Union[str, Path]) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"invalid JSON: {exc}") from exc


def load_scenario(path: Union[str, Path]) -> Tuple[Scenario, SolverConfig]:
    return scenario_from_dict(load_json(path))


def validate_sweep(doc: dict) -> dict:
    _validate(doc, SWEEP_SCHEMA)
    return doc


def fmt(x) -> str:
    """Six significant digits; ``inf``/``nan`` literals for non-finite values."""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool,)):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.6g}"


def write_csv(path_or_buf, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    text = buf.getvalue()
    if path_or_buf is not None:
        Path(path_or_buf).write_text(text, encoding="utf-8")
    return text
