"""JSON file formats for graphs and quantum timelines.

Complex numbers are two-element arrays ``[re, im]``.  A dense tensor is
``{"shape": [...], "data": [[re, im], ...]}`` in row-major order; wherever a
matrix is expected, ``{"gate": name}`` may be used instead.

Graph file (version 1)::

    {"version": 1,
     "variables": [{"id": 0, "size": 2, "name": "x1"}, ...],
     "factors": [{"vars": [0, 1], "shape": [2, 2], "data": [...]},
                 {"gate": "equality", "vars": [1, 2, 3]}],
     "boxes": {"inner": [1, 2]},
     "mirror_pairs": [[u, l], ...]}

Timeline file (version 1)::

    {"version": 1, "dimension": 2,
     "initial": {"prior": [0.5, 0.5]} | {"known": 0} | {"density": tensor},
     "steps": [{"unitary": matrix},
               {"measure": {"type": "projection", "basis": matrix, "observed": 1}},
               {"measure": {"type": "partial", "basis": matrix, "idle_dim": 2}},
               {"measure": {"type": "general", "matrices": [matrix, ...]}}]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ArgumentError, DimensionError, FormatError
from .gates import gate
from .graph import FactorGraph
from .quantum import (
    ClassicalPrior,
    GivenDensity,
    KnownValue,
    Measure,
    MeasurementFamily,
    QuantumTimeline,
    Unitary,
    partial_family,
    projection_family,
)

_COMPLEX = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_DENSE = {
    "type": "object",
    "required": ["shape", "data"],
    "properties": {
        "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "data": {"type": "array", "items": _COMPLEX},
    },
}
_GATE = {
    "type": "object",
    "required": ["gate"],
    "properties": {"gate": {"type": "string"}},
}
_MATRIX = {"oneOf": [_DENSE, _GATE]}

GRAPH_SCHEMA = {
    "type": "object",
    "required": ["version", "variables", "factors"],
    "properties": {
        "version": {"const": 1},
        "variables": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "size"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "size": {"type": "integer", "minimum": 1},
                    "name": {"type": "string"},
                },
                "additionalProperties": False,
            },
        },
        "factors": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["vars"],
                "properties": {
                    "vars": {"type": "array", "items": {"type": "integer"}},
                    "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    "data": {"type": "array", "items": _COMPLEX},
                    "gate": {"type": "string"},
                    "name": {"type": "string"},
                },
                "oneOf": [{"required": ["shape", "data"]}, {"required": ["gate"]}],
                "additionalProperties": False,
            },
        },
        "boxes": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        },
        "mirror_pairs": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2},
        },
    },
    "additionalProperties": False,
}

_MEASURE = {
    "type": "object",
    "required": ["type"],
    "properties": {
        "type": {"enum": ["projection", "partial", "general"]},
        "basis": _MATRIX,
        "idle_dim": {"type": "integer", "minimum": 1},
        "matrices": {"type": "array", "items": _MATRIX, "minItems": 1},
        "observed": {"type": ["integer", "null"], "minimum": 0},
    },
    "additionalProperties": False,
}

TIMELINE_SCHEMA = {
    "type": "object",
    "required": ["version", "dimension", "initial", "steps"],
    "properties": {
        "version": {"const": 1},
        "dimension": {"type": "integer", "minimum": 1},
        "initial": {
            "oneOf": [
                {"type": "object", "required": ["prior"], "properties": {"prior": {"type": "array", "items": {"type": "number"}}}, "additionalProperties": False},
                {"type": "object", "required": ["known"], "properties": {"known": {"type": "integer", "minimum": 0}}, "additionalProperties": False},
                {"type": "object", "required": ["density"], "properties": {"density": _MATRIX}, "additionalProperties": False},
            ]
        },
        "steps": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "object", "required": ["unitary"], "properties": {"unitary": _MATRIX}, "additionalProperties": False},
                    {"type": "object", "required": ["measure"], "properties": {"measure": _MEASURE}, "additionalProperties": False},
                ]
            },
        },
    },
    "additionalProperties": False,
}


def _where(path) -> str:
    out = "$"
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _validate(doc, schema, what: str):
    validator = jsonschema.Draft202012Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise FormatError(f"{what}: at {_where(e.absolute_path)}: {e.message}")


def load_json(path_or_text) -> dict:
    """Parse JSON from a path or a string, reporting line and column on failure."""
    if isinstance(path_or_text, Path) or (isinstance(path_or_text, str) and not path_or_text.lstrip().startswith("{")):
        try:
            text = Path(path_or_text).read_text()
        except OSError as exc:
            raise FormatError(f"cannot read {path_or_text}: {exc}") from exc
    else:
        text = path_or_text
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def encode_complex_array(a) -> list:
    a = np.asarray(a, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in a]


def encode_tensor(a) -> dict:
    a = np.asarray(a, dtype=np.complex128)
    return {"shape": list(a.shape), "data": encode_complex_array(a)}


def decode_tensor(obj: dict, where: str, sizes: tuple[int, ...] = ()) -> np.ndarray:
    if "gate" in obj:
        try:
            return gate(obj["gate"], sizes)
        except ArgumentError as exc:
            raise FormatError(f"{where}.gate: {exc}") from exc
    shape = tuple(obj["shape"])
    data = obj["data"]
    n = int(np.prod(shape, dtype=np.int64))
    if len(data) != n:
        raise FormatError(f"{where}.data: length {len(data)} does not match shape {list(shape)} (expected {n})")
    arr = np.array([complex(re, im) for re, im in data], dtype=np.complex128)
    return arr.reshape(shape)


# -- graphs -----------------------------------------------------------------


@dataclass
class GraphFile:
    graph: FactorGraph
    boxes: dict[str, list[int]] = field(default_factory=dict)
    mirror_pairs: list[tuple[int, int]] = field(default_factory=list)


def parse_graph(doc: dict) -> GraphFile:
    """Build a graph from a parsed graph document.

    Raises:
        FormatError: schema violations or malformed tensors.
        QFGError: semantic problems such as a third attachment of a variable.
    """
    _validate(doc, GRAPH_SCHEMA, "graph file")
    g = FactorGraph()
    for i, v in enumerate(doc["variables"]):
        try:
            g.add_variable(v["size"], v.get("name"), var_id=v["id"])
        except ArgumentError as exc:
            raise FormatError(f"$.variables[{i}]: {exc}") from exc
    for i, f in enumerate(doc["factors"]):
        where = f"$.factors[{i}]"
        missing = [v for v in f["vars"] if v not in g.variables]
        if missing:
            raise FormatError(f"{where}.vars: unknown variable ids {missing}")
        sizes = tuple(g.size(v) for v in f["vars"])
        t = decode_tensor(f, where, sizes)
        if t.shape != sizes:
            raise DimensionError(f"{where}: tensor shape {list(t.shape)} does not match variable sizes {list(sizes)}")
        g.add_factor(t, f["vars"], f.get("name"))
    boxes = {k: list(v) for k, v in doc.get("boxes", {}).items()}
    for name, box in boxes.items():
        bad = [i for i in box if i >= len(g.factors)]
        if bad:
            raise FormatError(f"$.boxes.{name}: unknown factor indices {bad}")
    pairs = [tuple(p) for p in doc.get("mirror_pairs", [])]
    return GraphFile(g, boxes, pairs)


def dump_graph(gf: GraphFile | FactorGraph) -> dict:
    if isinstance(gf, FactorGraph):
        gf = GraphFile(gf)
    g = gf.graph
    variables = []
    for v, size in sorted(g.variables.items()):
        entry = {"id": v, "size": size}
        if g.name(v) is not None:
            entry["name"] = g.name(v)
        variables.append(entry)
    factors = []
    for f in g.factors:
        entry = {"vars": list(f.vars), **encode_tensor(f.tensor)}
        if f.name is not None:
            entry["name"] = f.name
        factors.append(entry)
    doc = {"version": 1, "variables": variables, "factors": factors}
    if gf.boxes:
        doc["boxes"] = {k: list(v) for k, v in gf.boxes.items()}
    if gf.mirror_pairs:
        doc["mirror_pairs"] = [list(p) for p in gf.mirror_pairs]
    return doc


# -- timelines --------------------------------------------------------------


def parse_timeline(doc: dict) -> QuantumTimeline:
    _validate(doc, TIMELINE_SCHEMA, "timeline file")
    m = doc["dimension"]
    init = doc["initial"]
    if "prior" in init:
        initial = ClassicalPrior(np.array(init["prior"], dtype=float))
    elif "known" in init:
        initial = KnownValue(init["known"])
    else:
        initial = GivenDensity(decode_tensor(init["density"], "$.initial.density", (m, m)))
    steps = []
    for i, s in enumerate(doc["steps"]):
        where = f"$.steps[{i}]"
        if "unitary" in s:
            steps.append(Unitary(decode_tensor(s["unitary"], where + ".unitary", (m, m))))
            continue
        ms = s["measure"]
        kind = ms["type"]
        if kind in ("projection", "partial"):
            if "basis" not in ms:
                raise FormatError(f"{where}.measure: '{kind}' needs a basis")
            n = m // ms.get("idle_dim", 1) if kind == "partial" else m
            basis = decode_tensor(ms["basis"], where + ".measure.basis", (n, n))
            fam = projection_family(basis) if kind == "projection" else partial_family(basis, ms.get("idle_dim", 1))
        else:
            if "matrices" not in ms:
                raise FormatError(f"{where}.measure: 'general' needs matrices")
            mats = [decode_tensor(a, f"{where}.measure.matrices[{j}]", (m, m)) for j, a in enumerate(ms["matrices"])]
            if len({a.shape for a in mats}) != 1:
                raise DimensionError(f"{where}.measure: matrices differ in shape")
            fam = MeasurementFamily(np.stack(mats))
        steps.append(Measure(fam, ms.get("observed")))
    return QuantumTimeline(m, initial, steps)


def dump_timeline(t: QuantumTimeline) -> dict:
    init = t.initial
    if isinstance(init, ClassicalPrior):
        initial = {"prior": [float(p) for p in init.p]}
    elif isinstance(init, KnownValue):
        initial = {"known": int(init.x0)}
    else:
        initial = {"density": encode_tensor(init.rho)}
    steps = []
    for s in t.steps:
        if isinstance(s, Unitary):
            steps.append({"unitary": encode_tensor(s.U)})
        else:
            ms = {"type": "general", "matrices": [encode_tensor(a) for a in s.family.matrices]}
            if s.observed is not None:
                ms["observed"] = int(s.observed)
            steps.append({"measure": ms})
    return {"version": 1, "dimension": t.dimension, "initial": initial, "steps": steps}


def load_document(path_or_text) -> tuple[str, dict]:
    """Load a file and report whether it is a ``"graph"`` or a ``"timeline"``."""
    doc = load_json(path_or_text)
    if not isinstance(doc, dict):
        raise FormatError("top-level JSON value must be an object")
    return ("timeline" if "dimension" in doc else "graph"), doc
