"""JSON Schema (draft 2020-12) for every document the CLI emits."""
from __future__ import annotations

SCHEMA_VERSION = "1.0"

_num = {"type": ["number", "null"]}
_names = {"type": "array", "items": {"type": "string"}}
_matrix = {"type": "array", "items": {"type": "array", "items": _num}}

_equilibrium = {
    "type": "object",
    "required": ["face", "values", "residual", "eigenvalues", "classification"],
    "properties": {
        "face": _names,
        "values": {"type": "object", "additionalProperties": {"type": "number"}},
        "residual": {"type": "number"},
        "eigenvalues": {"type": "array", "items": {"type": "array", "items": {"type": "number"},
                                                   "minItems": 2, "maxItems": 2}},
        "classification": {"enum": ["stable", "unstable", "marginal"]},
    },
}

_certificate = {
    "type": "object",
    "required": ["kind", "set", "vector", "strict"],
    "properties": {
        "kind": {"enum": ["conservation", "drain-flux", "replicate-flux", "core-flux"]},
        "set": _names,
        "vector": {"type": "array", "items": {"type": "string"}},
        "strict": {"type": "boolean"},
    },
}

_siphon = {
    "type": "object",
    "required": ["set", "is_minimal", "is_critical", "is_drainable", "is_self_replicable_restricted",
                 "is_self_replicable_strict", "is_autocatalytic", "is_exclusive"],
    "properties": {"set": _names, "certificates": {"type": "array", "items": _certificate}},
}

_ngm = {
    "type": "object",
    "required": ["x_vars", "F", "V", "K", "blocks", "rho_per_block", "R0", "is_block_lower_triangular"],
    "properties": {"F": _matrix, "V": _matrix, "K": _matrix, "R0": {"type": "number"},
                   "is_block_lower_triangular": {"type": "boolean"}},
}


def _doc(command: str, required, properties) -> dict:
    return {
        "if": {"properties": {"command": {"const": command}}},
        "then": {"required": list(required), "properties": properties},
    }


SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "command"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "command": {"enum": ["parse", "siphons", "igms", "ngm", "boundary", "invade",
                             "simulate", "scan", "report", "fixtures", "error"]},
    },
    "allOf": [
        _doc("parse", ["network", "mass_action"], {"network": {
            "type": "object", "required": ["species", "parameters", "reactions", "gamma"]}}),
        _doc("siphons", ["minimal_siphons", "total_siphon"], {
            "minimal_siphons": {"type": "array", "items": _siphon}, "total_siphon": _names}),
        _doc("igms", ["graph", "cycles", "amsd"], {"cycles": {"type": "array"}}),
        _doc("ngm", ["ngm", "split"], {"ngm": _ngm}),
        _doc("boundary", ["equilibria"], {"equilibria": {"type": "array", "items": _equilibrium}}),
        _doc("invade", ["graph"], {"graph": {"type": "object", "required": ["nodes", "edges", "blocks"]}}),
        _doc("simulate", ["steps", "rejected", "final_state", "persistence"], {
            "persistence": {"type": "object", "required": ["tail_slope", "verdict"],
                            "properties": {"verdict": {
                                "enum": ["persistent-like", "nonpersistent-like", "inconclusive"]}}}}),
        _doc("scan", ["scan"], {"scan": {"type": "object", "required": ["axes", "cells", "legend"]}}),
        _doc("report", ["report"], {"report": {
            "type": "object",
            "required": ["rhs", "variables", "parameters", "minimal_siphons", "dfe", "ngm",
                         "reproduction_numbers", "igms", "me_checklist", "boundary", "errors"],
            "properties": {"boundary": {"type": ["array", "null"], "items": _equilibrium},
                           "errors": {"type": "object", "additionalProperties": {"type": "string"}}}}}),
        _doc("fixtures", ["fixtures"], {"fixtures": {"type": "array"}}),
        _doc("error", ["error", "exit_code"], {"exit_code": {"type": "integer"}}),
    ],
}
