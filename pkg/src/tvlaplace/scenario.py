"""Scenario documents: JSON schema, validation and defaults."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from typing import Any

import jsonschema

from .approx import METRICS, SCHEMES, ApproximationSchedule
from .datum import RadialDatum, Term
from .errors import ReportIOError, ScenarioError
from .growth import GrowthSpec, growth_from_dict

COMMANDS = ("solve", "verify", "norms", "classify", "converge")

_TERM = {
    "type": "object",
    "properties": {
        "c": {"type": "number"},
        "q": {"type": "number"},
        "a": {"type": "number"},
        "b": {"type": ["number", "null"]},
    },
    "required": ["c", "q"],
    "additionalProperties": False,
}

_GROWTH = {
    "type": "object",
    "properties": {
        "family": {
            "enum": [
                "constant", "affine_plus", "rational1", "rational2",
                "hinge_plus", "trapezoid", "piecewise_linear",
            ]
        },
        "m": {"type": "number"},
        "base": {"type": "number"},
        "slope": {"type": "number"},
        "a": {"type": "number"},
        "b": {"type": "number"},
        "knots": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
            "minItems": 1,
        },
    },
    "required": ["family"],
    "additionalProperties": False,
}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tvlaplace scenario",
    "type": "object",
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "N": {"type": "integer"},
        "R": {"type": "number"},
        "terms": {"type": "array", "items": _TERM},
        "growth": _GROWTH,
        "options": {
            "type": "object",
            "properties": {
                "grid": {"type": "integer", "minimum": 2},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "policy": {"enum": ["minimal", "upper"]},
                "envelope": {"enum": ["reflection", "running_min"]},
                "out": {"type": ["string", "null"]},
                "bumps": {"type": "integer", "minimum": 1},
                "candidate": {"type": ["string", "null"]},
                "tamper": {"type": ["string", "null"]},
                "q": {"type": "number", "exclusiveMinimum": 1},
                "levels": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "measures": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "schedule": {
                    "type": ["object", "null"],
                    "properties": {
                        "scheme": {"enum": list(SCHEMES)},
                        "params": {"type": "array", "items": {"type": "number"}, "minItems": 1},
                        "metric": {"enum": list(METRICS)},
                        "delta": {"type": ["number", "null"]},
                    },
                    "required": ["scheme", "params"],
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["command", "N", "R", "terms", "growth"],
    "additionalProperties": False,
}

DEFAULT_OPTIONS: dict[str, Any] = {
    "grid": 2048,
    "tol": 1e-6,
    "policy": "minimal",
    "envelope": "reflection",
    "out": None,
    "bumps": 20,
    "candidate": None,
    "tamper": None,
    "q": None,  # defaults to N once N is known
    "levels": [],
    "measures": [],
    "schedule": None,
}


@dataclass(frozen=True)
class Scenario:
    command: str
    datum: RadialDatum
    growth: GrowthSpec
    options: dict
    document: dict  # the validated input with every default filled in

    @property
    def schedule(self) -> ApproximationSchedule | None:
        s = self.options.get("schedule")
        if s is None:
            return None
        return ApproximationSchedule(s["scheme"], tuple(s["params"]), s.get("metric", "L1"), s.get("delta"))


def _path(err: jsonschema.ValidationError) -> str:
    return "/".join(str(p) for p in err.absolute_path) or "<root>"


def parse_scenario(document: dict | str) -> Scenario:
    """Validate a scenario document and materialize every default."""
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ScenarioError(f"{_path(e)}: {e.message}")
    doc = copy.deepcopy(document)
    options = {**copy.deepcopy(DEFAULT_OPTIONS), **doc.get("options", {})}
    if options["q"] is None:
        options["q"] = float(doc["N"])
    if doc["command"] == "converge" and options["schedule"] is None:
        raise ScenarioError("options/schedule: required by the converge command")
    if options["schedule"] is not None:
        options["schedule"] = {"metric": "L1", "delta": None, **options["schedule"]}
    terms = tuple(
        Term(t["c"], t["q"], t.get("a", 0.0), t.get("b")) for t in doc["terms"]
    )
    datum = RadialDatum(doc["N"], doc["R"], terms)
    growth = growth_from_dict(doc["growth"])
    doc["options"] = options
    doc["terms"] = [{"c": t.c, "q": t.q, "a": t.a, "b": t.b} for t in datum.terms]
    doc["growth"] = growth.to_dict()
    scen = Scenario(doc["command"], datum, growth, options, doc)
    scen.schedule  # validates the schedule eagerly
    return scen


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ReportIOError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text)
