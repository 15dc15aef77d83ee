"""JSON codecs and schemas for problem files and results.

Complex numbers are ``[re, im]`` pairs; plain numbers are accepted on input
as real entries.  Output is made deterministic by sorting keys, writing
floats in shortest round-trip form and folding ``-0.0`` into ``0.0``.
"""

from __future__ import annotations

import json
from typing import Any, Optional

import jsonschema
import numpy as np

from .algebra import Algebra, State
from .disintegration import Certificate, DisintegrationResult
from .maps import BlockMap, BratteliHom, trivial_unitaries

NUMBER = {"type": "number"}
ENTRY = {
    "oneOf": [
        NUMBER,
        {"type": "array", "items": NUMBER, "minItems": 2, "maxItems": 2},
    ]
}
MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": ENTRY},
}
DIMS = {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}}
ALGEBRA = {
    "type": "object",
    "properties": {"dims": DIMS},
    "required": ["dims"],
    "additionalProperties": False,
}
STATE = {
    "type": "object",
    "properties": {
        "algebra": ALGEBRA,
        "weights": {"type": "array", "minItems": 1, "items": NUMBER},
        "densities": {"type": "array", "minItems": 1, "items": MATRIX},
    },
    "required": ["weights", "densities"],
    "additionalProperties": False,
}
BLOCKMAP = {
    "type": "object",
    "properties": {
        "source": ALGEBRA,
        "target": ALGEBRA,
        "choi": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": MATRIX}},
    },
    "required": ["source", "target", "choi"],
    "additionalProperties": False,
}
HOM = {
    "type": "object",
    "properties": {
        "source": ALGEBRA,
        "target": ALGEBRA,
        "multiplicities": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 0}},
        },
        "unitaries": {"type": "array", "items": MATRIX},
    },
    "required": ["source", "target", "multiplicities"],
    "additionalProperties": False,
}
PROB = {"type": "array", "minItems": 1, "items": {"type": "number", "minimum": 0}}


def _obj(properties: dict, required: list[str]) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": required,
        "additionalProperties": False,
    }


PAYLOADS = {
    "check-map": {"oneOf": [_obj({"map": BLOCKMAP}, ["map"]), _obj({"hom": HOM}, ["hom"])]},
    "ae-equal": _obj({"f": BLOCKMAP, "g": BLOCKMAP, "xi": STATE}, ["f", "g", "xi"]),
    "disintegrate": {
        "oneOf": [
            _obj(
                {"rho": MATRIX, "sigma": MATRIX, "p": {"type": "integer", "minimum": 1}, "unitary": MATRIX},
                ["rho", "sigma", "p"],
            ),
            _obj({"hom": HOM, "omega": STATE, "xi": STATE}, ["hom", "omega"]),
        ]
    },
    "classical": _obj(
        {
            "map": {"type": "array", "minItems": 1, "items": {"type": "integer", "minimum": 1}},
            "p": PROB,
            "q": PROB,
            "size_y": {"type": "integer", "minimum": 1},
        },
        ["map", "p"],
    ),
    "measure": _obj({"observable": MATRIX, "rho": MATRIX}, ["observable", "rho"]),
    "compose": _obj({"f": BLOCKMAP, "g": BLOCKMAP}, ["f", "g"]),
}

PROBLEM = {
    "title": "problem",
    "type": "object",
    "properties": {
        "version": {"const": "1"},
        "kind": {"enum": sorted(PAYLOADS)},
        "payload": {"type": "object"},
    },
    "required": ["version", "kind", "payload"],
    "additionalProperties": False,
}


def validate_problem(doc: Any) -> tuple[str, dict]:
    """Check the envelope and the kind-specific payload; return both."""
    jsonschema.validate(instance=doc, schema=PROBLEM)
    jsonschema.validate(instance=doc["payload"], schema=PAYLOADS[doc["kind"]])
    return doc["kind"], doc["payload"]


# decoding -----------------------------------------------------------------


def decode_matrix(rows: list) -> np.ndarray:
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("ragged matrix")
    out = np.empty((len(rows), width), dtype=np.complex128)
    for a, row in enumerate(rows):
        for b, v in enumerate(row):
            out[a, b] = complex(v[0], v[1]) if isinstance(v, list) else v
    return out


def decode_algebra(doc: dict) -> Algebra:
    return Algebra(tuple(doc["dims"]))


def decode_state(doc: dict, algebra: Algebra) -> State:
    if "algebra" in doc and decode_algebra(doc["algebra"]) != algebra:
        raise ValueError("state algebra does not match")
    return State(algebra, np.array(doc["weights"], dtype=float), tuple(decode_matrix(d) for d in doc["densities"]))


def decode_blockmap(doc: dict) -> BlockMap:
    grid = tuple(tuple(decode_matrix(c) for c in row) for row in doc["choi"])
    return BlockMap(decode_algebra(doc["source"]), decode_algebra(doc["target"]), grid)


def decode_hom(doc: dict) -> BratteliHom:
    source = decode_algebra(doc["source"])
    target = decode_algebra(doc["target"])
    if "unitaries" in doc:
        us = tuple(decode_matrix(u) for u in doc["unitaries"])
    else:
        us = trivial_unitaries(target)
    return BratteliHom(source, target, np.array(doc["multiplicities"], dtype=int), us)


# encoding -----------------------------------------------------------------


def real(x) -> float:
    x = float(x)
    return 0.0 if x == 0.0 else x


def encode_matrix(a: np.ndarray) -> list:
    return [[[real(v.real), real(v.imag)] for v in row] for row in np.asarray(a, dtype=np.complex128)]


def encode_real_matrix(a: np.ndarray) -> list:
    return [[real(v) for v in row] for row in np.asarray(a, dtype=float)]


def encode_algebra(a: Algebra) -> dict:
    return {"dims": list(a.dims)}


def encode_state(s: State) -> dict:
    return {
        "weights": [real(w) for w in s.weights],
        "densities": [encode_matrix(d) for d in s.densities],
    }


def encode_blockmap(f: BlockMap) -> dict:
    return {
        "source": encode_algebra(f.source),
        "target": encode_algebra(f.target),
        "choi": [[encode_matrix(c) for c in row] for row in f.choi],
    }


def encode_residuals(res: dict) -> dict:
    return {k: real(v) for k, v in res.items()}


def encode_certificate(c: Certificate) -> dict:
    return {
        "residuals": encode_residuals(c.residuals),
        "violations": list(c.violations),
        "verification": None
        if c.verification is None
        else {
            "passed": c.verification.passed,
            "residuals": encode_residuals(c.verification.residuals()),
        },
    }


def encode_result(r: DisintegrationResult, null_blocks: Optional[list[int]] = None) -> dict:
    """Result document; block indices in ``null_blocks``/``unconstrained`` are 1-based."""
    return {
        "exists": r.exists,
        "tau": None
        if r.tau is None
        else [[None if t is None else encode_matrix(t) for t in row] for row in r.tau],
        "null_blocks": [j + 1 for j in sorted(null_blocks or [])],
        "unconstrained": [[j + 1, i + 1] for j, i in sorted(r.unconstrained)],
        "map": None if r.map is None else encode_blockmap(r.map),
        "certificate": encode_certificate(r.certificate),
    }


def dumps(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
