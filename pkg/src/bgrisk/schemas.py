"""JSON schemas for the file formats read and written by the CLI."""

from __future__ import annotations

import jsonschema

_num = {"type": "number"}
_opt_num = {"type": ["number", "null"]}

GAMBLE = {
    "type": "object",
    "required": ["atoms"],
    "properties": {
        "atoms": {
            "type": "array", "minItems": 1,
            "items": {"type": "array", "items": _num, "minItems": 2, "maxItems": 2},
        }
    },
}

GRID = {
    "type": "object",
    "required": ["lo", "h", "masses"],
    "properties": {
        "lo": _num, "h": {"type": "number", "exclusiveMinimum": 0},
        "masses": {"type": "array", "items": _num, "minItems": 1},
        "tail_left": _num, "tail_right": _num,
    },
}

NOISE = {
    "type": "object",
    "required": ["kernel", "c", "K", "pi", "provenance"],
    "properties": {
        "kernel": {
            "type": "object", "required": ["type", "param"],
            "properties": {"type": {"enum": ["GAUSSIAN", "UNIFORM_PAIR"]},
                           "param": {"type": "number", "exclusiveMinimum": 0}},
        },
        "c": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
        "K": {"type": "integer", "minimum": 0},
        "pi": GRID,
        "provenance": {"type": "object"},
    },
}

UNIFORM_NOISE = {
    "type": "object",
    "required": ["kind", "M", "eps", "a", "K"],
    "properties": {"kind": {"const": "UNIFORM_SPEC"}, "M": _num, "eps": _num, "a": _num,
                   "K": {"type": "integer", "minimum": 0}},
}

ANY_NOISE = {
    "oneOf": [
        NOISE,
        UNIFORM_NOISE,
        {"type": "object", "required": ["components", "shift"],
         "properties": {"components": {"type": "array", "items": {"oneOf": [NOISE, UNIFORM_NOISE]}},
                        "shift": _num}},
    ]
}

VERDICT = {
    "type": "object",
    "required": ["relation", "worst_violation", "witness_point", "truncation_mass"],
    "properties": {
        "relation": {"enum": ["FIRST_STRICT", "SECOND_STRICT", "NONE", "EQUAL_DISTRIBUTION"]},
        "worst_violation": _opt_num, "witness_point": _opt_num,
        "truncation_mass": {"type": "number", "minimum": 0},
    },
}

MECHANISM = {
    "type": "object",
    "required": ["agents", "types", "gambles"],
    "properties": {
        "agents": {"type": "integer", "minimum": 1},
        "types": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "prior": {"type": "array"},
        "gambles": {"type": "object", "patternProperties": {r"^\d+:[^:]+:[^:]+$": GAMBLE},
                    "additionalProperties": False},
        "allocation": {"type": "object"},
    },
}


def validate(instance, schema) -> None:
    jsonschema.validate(instance, schema)
