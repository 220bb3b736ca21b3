"""JSON encoding of lattices, operators, algebras, complexes and reports.

Every document carries ``"schema": 1``.  Integers are JSON numbers while
``|n| < 2**53`` (exactly representable in every JSON reader) and decimal
strings beyond that bound; rationals are ``"p/q"`` strings.  Output is
sorted and indented so identical inputs give identical bytes.
"""
from __future__ import annotations

import ast
import json
from fractions import Fraction
from typing import Any

import numpy as np

from .algebra import DirectedAlgebra
from .complexes import ProjComplex
from .lattice import EulerLattice, KClass, LatticeOp

SCHEMA_VERSION = 1
INT_BOUND = 2 ** 53


class SchemaError(ValueError):
    pass


# ----------------------------------------------------------------------
# scalars

def encode_int(n: int):
    n = int(n)
    return n if abs(n) < INT_BOUND else str(n)


def decode_int(x) -> int:
    if isinstance(x, bool):
        raise SchemaError("boolean where an integer was expected")
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return int(x)
        except ValueError:
            raise SchemaError(f"not an integer: {x!r}") from None
    raise SchemaError(f"not an integer: {x!r}")


def decode_rational(x) -> Fraction:
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError):
            raise SchemaError(f"not a rational: {x!r}") from None
    return Fraction(decode_int(x))


def encode(obj: Any):
    """Plain JSON data for nested containers of exact numbers."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, (int, np.integer)):
        return encode_int(obj)
    if isinstance(obj, Fraction):
        return encode_int(obj.numerator) if obj.denominator == 1 else str(obj)
    if isinstance(obj, float):
        return obj
    if isinstance(obj, np.ndarray):
        return [encode(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return json.dumps(encode(obj), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _matrix(rows) -> list:
    return [[encode_int(x) for x in r] for r in rows]


def _decode_matrix(rows) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(decode_int(x) for x in r) for r in rows)


# ----------------------------------------------------------------------
# lattices

def lattice_to_json(lat: EulerLattice) -> dict:
    return {"schema": SCHEMA_VERSION, "type": "lattice", "name": lat.name,
            "labels": list(lat.labels), "gram": _matrix(lat.gram),
            "exceptional_basis": lat.exceptional_basis}


def lattice_from_json(doc: dict) -> EulerLattice:
    validate(doc, "lattice")
    return EulerLattice(_decode_matrix(doc["gram"]), tuple(doc.get("labels", ())),
                        bool(doc.get("exceptional_basis", False)), doc.get("name", ""))


def class_to_json(v: KClass) -> dict:
    return {"schema": SCHEMA_VERSION, "type": "class", "lattice": v.lattice.name,
            "coords": [encode_int(x) for x in v.coords]}


def class_from_json(doc: dict, lat: EulerLattice) -> KClass:
    validate(doc, "class")
    coords = tuple(decode_int(x) for x in doc["coords"])
    if len(coords) != lat.rank:
        raise SchemaError("class has the wrong rank for its lattice")
    return lat.cls(coords)


def op_to_json(op: LatticeOp) -> dict:
    return {"schema": SCHEMA_VERSION, "type": "op", "source": op.source.name,
            "target": op.target.name, "matrix": _matrix(op.matrix)}


def op_from_json(doc: dict, source: EulerLattice, target: EulerLattice | None = None) -> LatticeOp:
    validate(doc, "op")
    try:
        return LatticeOp(_decode_matrix(doc["matrix"]), source, target)
    except ValueError as exc:
        raise SchemaError(str(exc)) from None


# ----------------------------------------------------------------------
# algebras and complexes

def algebra_to_json(alg: DirectedAlgebra) -> dict:
    mult = []
    n = alg.n
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if alg.dim(i, j) and alg.dim(j, k) and alg.dim(i, k) and len({i, j, k}) > 1:
                    if i == j or j == k:
                        continue            # identity laws fix these
                    mult.append({"i": i, "j": j, "k": k,
                                 "tensor": encode(np.asarray(alg.mult(i, j, k)))})
    return {"schema": SCHEMA_VERSION, "type": "algebra", "name": alg.name,
            "labels": [str(x) for x in alg.labels],
            "dims": _matrix(alg.dims.tolist()), "mult": mult}


def algebra_from_json(doc: dict) -> DirectedAlgebra:
    """Inverse of ``algebra_to_json``; identity compositions are rebuilt."""
    validate(doc, "algebra")
    dims = np.array(_decode_matrix(doc["dims"]), dtype=np.int64)
    n = len(dims)
    table = {}
    for e in doc["mult"]:
        table[(e["i"], e["j"], e["k"])] = np.array(
            [[[decode_int(x) for x in r] for r in m] for m in e["tensor"]], dtype=np.int64)

    def mult(i, j, k):
        if (i, j, k) in table:
            return table[(i, j, k)]
        if i == j or j == k:
            d = dims[i, k]
            m = np.zeros((dims[j, k], dims[i, j], d), dtype=np.int64)
            for a in range(d):
                if i == j:
                    m[a, 0, a] = 1
                else:
                    m[0, a, a] = 1
            return m
        return np.zeros((dims[j, k], dims[i, j], dims[i, k]), dtype=np.int64)

    alg = DirectedAlgebra(doc.get("name", ""), doc["labels"], dims, mult)
    if len(alg.labels) != n:
        raise SchemaError("one label per vertex")
    return alg


def _label(lab) -> str:
    return repr(lab)


def _unlabel(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        raise SchemaError(f"bad term label {text!r}") from None


def complex_to_json(X: ProjComplex) -> dict:
    """Terms per degree in label order; ``d`` lists nonzero blocks as
    (degree, source index, target index, coefficient vector)."""
    terms, blocks = {}, []
    index = {}
    for n in X.degrees():
        labs = X.labels(n)
        index[n] = {lab: p for p, lab in enumerate(labs)}
        terms[str(n)] = [{"label": _label(lab), "vertex": int(X.terms[n][lab])} for lab in labs]
    for n in sorted(X.d):
        for t, row in X.d[n].items():
            for s, v in row.items():
                blocks.append({"degree": n, "source": index[n][s], "target": index[n + 1][t],
                               "entry": encode(np.asarray(v))})
    blocks.sort(key=lambda b: (b["degree"], b["target"], b["source"]))
    doc = {"schema": SCHEMA_VERSION, "type": "complex", "algebra": X.algebra.name,
           "name": X.name, "terms": terms, "d": blocks}
    return doc


def complex_from_json(doc: dict, alg: DirectedAlgebra) -> ProjComplex:
    validate(doc, "complex")
    terms, labs = {}, {}
    for n, items in doc["terms"].items():
        n = int(n)
        labs[n] = [_unlabel(it["label"]) for it in items]
        terms[n] = {lab: int(it["vertex"]) for lab, it in zip(labs[n], items)}
    d: dict = {}
    for b in doc["d"]:
        n = int(b["degree"])
        s, t = labs[n][b["source"]], labs[n + 1][b["target"]]
        d.setdefault(n, {}).setdefault(t, {})[s] = np.array(
            [decode_rational(x) for x in b["entry"]], dtype=object)
    X = ProjComplex(alg, terms, d, name=doc.get("name", ""))
    return X


def bimodule_to_json(K: ProjComplex) -> dict:
    """A kernel: a complex over A (x) B^op whose vertices are pairs."""
    from .kernels import factors
    a, b = factors(K)
    doc = complex_to_json(K)
    doc["type"] = "bimodule"
    doc["factors"] = [a.name, b.name]
    doc["pairs"] = [list(p) for p in K.algebra.pairs]
    return doc


# ----------------------------------------------------------------------
# presets

def preset_to_json(geom) -> dict:
    from .algebra import beilinson
    comps = {}
    for name, c in geom.components.items():
        comps[name] = {"model": c.model.name, "local": list(c.local),
                       "restriction": {g: [encode_int(x) for x in v]
                                       for g, v in c.restriction.items()},
                       "curves": dict(c.curves)}
    doc = {"schema": SCHEMA_VERSION, "type": "preset", "name": geom.name,
           "lattice": lattice_to_json(geom.lattice), "pic": list(geom.pic),
           "divisors": {k: [encode_int(x) for x in v] for k, v in geom.divisors.items()},
           "classes": {k: _class_entry(v) for k, v in geom.classes.items()},
           "components": comps, "notes": list(geom.notes)}
    if geom.chow is not None:
        m = geom.chow
        doc["chow"] = {"name": m.name, "basis": list(m.names), "degrees": list(m.degrees),
                       "dim": m.dim, "todd": encode(list(m.todd)),
                       "mult": [{"i": i, "j": j, "product": encode(list(v))}
                                for (i, j), v in sorted(m.mult.items())]}
    if geom.name.startswith("p") and geom.name.endswith("_beilinson"):
        doc["algebra"] = algebra_to_json(beilinson(int(geom.name[1])))
    return doc


def _class_entry(v):
    if len(v) == 2 and isinstance(v[0], str):
        return {"support": v[0], "local": [encode_int(x) for x in v[1]]}
    return [encode_int(x) for x in v]


# ----------------------------------------------------------------------
# schemas

_INT = {"anyOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+$"}]}
_RAT = {"anyOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}
_MATRIX = {"type": "array", "items": {"type": "array", "items": _INT}}
_HEADER = {"schema": {"const": SCHEMA_VERSION}}

SCENARIO_KINDS = ("lattice-check", "dual-seq", "diag-res", "convolve-test", "theorem", "rewrite")

SCHEMAS: dict[str, dict] = {
    "lattice": {
        "type": "object", "required": ["gram"],
        "properties": {**_HEADER, "type": {"const": "lattice"}, "name": {"type": "string"},
                       "labels": {"type": "array", "items": {"type": "string"}},
                       "gram": _MATRIX, "exceptional_basis": {"type": "boolean"}}},
    "class": {
        "type": "object", "required": ["coords"],
        "properties": {**_HEADER, "type": {"const": "class"}, "lattice": {"type": "string"},
                       "coords": {"type": "array", "items": _INT}}},
    "op": {
        "type": "object", "required": ["matrix"],
        "properties": {**_HEADER, "type": {"const": "op"}, "source": {"type": "string"},
                       "target": {"type": "string"}, "matrix": _MATRIX}},
    "algebra": {
        "type": "object", "required": ["labels", "dims", "mult"],
        "properties": {**_HEADER, "type": {"const": "algebra"}, "name": {"type": "string"},
                       "labels": {"type": "array", "items": {"type": "string"}},
                       "dims": _MATRIX,
                       "mult": {"type": "array", "items": {
                           "type": "object", "required": ["i", "j", "k", "tensor"],
                           "properties": {"i": {"type": "integer"}, "j": {"type": "integer"},
                                          "k": {"type": "integer"},
                                          "tensor": {"type": "array"}}}}}},
    "complex": {
        "type": "object", "required": ["terms", "d"],
        "properties": {**_HEADER, "type": {"enum": ["complex", "bimodule"]},
                       "algebra": {"type": "string"}, "name": {"type": "string"},
                       "terms": {"type": "object", "additionalProperties": {
                           "type": "array", "items": {
                               "type": "object", "required": ["label", "vertex"],
                               "properties": {"label": {"type": "string"},
                                              "vertex": {"type": "integer"}}}}},
                       "d": {"type": "array", "items": {
                           "type": "object",
                           "required": ["degree", "source", "target", "entry"],
                           "properties": {"degree": {"type": "integer"},
                                          "source": {"type": "integer"},
                                          "target": {"type": "integer"},
                                          "entry": {"type": "array", "items": _RAT}}}}}},
    "scenario": {
        "type": "object", "required": ["schema", "id", "kind"],
        "properties": {
            **_HEADER,
            "id": {"type": "string", "pattern": r"^[A-Za-z0-9_.-]+$"},
            "kind": {"enum": list(SCENARIO_KINDS)},
            "description": {"type": "string"},
            "preset": {"type": "string"},
            "gram": _MATRIX,
            "relations": {"type": "array", "minItems": 1, "items": {
                "type": "object", "required": ["name", "word"],
                "properties": {"name": {"type": "string"},
                               "word": {"type": "array", "items": {"type": "string"}},
                               "expected_word": {"type": "array", "items": {"type": "string"}},
                               "expected_matrix": _MATRIX},
                "oneOf": [{"required": ["expected_word"]}, {"required": ["expected_matrix"]}]}},
            "expected_duals": {"type": "array", "items": {"type": "array", "items": _INT}},
            "kernel": {"enum": ["identity", "serre"]},
            "seed": {"type": "integer"},
            "count": {"type": "integer", "minimum": 1},
            "certify": {"type": "boolean"},
            "triangles": {"type": "boolean"},
            "scripts": {"type": "array", "items": {"type": "string"}},
            "inline_scripts": {"type": "array", "items": {
                "type": "object", "required": ["name", "preset", "start", "target", "steps"],
                "properties": {
                    "name": {"type": "string"}, "preset": {"type": "string"},
                    "start": {"type": "array", "items": {"type": "string"}},
                    "target": {"type": "array", "items": {"type": "string"}},
                    "steps": {"type": "array", "items": {
                        "type": "object", "required": ["rule", "position"],
                        "properties": {"rule": {"type": "string"},
                                       "position": {"type": "integer", "minimum": 0},
                                       "q_len": {"type": "integer", "minimum": 1},
                                       "lemma": {"type": "string"}}}}}}},
            "rule_bases": {"type": "object", "additionalProperties": _MATRIX},
        },
        "additionalProperties": False,
        "allOf": [
            {"if": {"properties": {"kind": {"const": "lattice-check"}}},
             "then": {"required": ["preset", "relations"]}},
            {"if": {"properties": {"kind": {"enum": ["dual-seq", "diag-res", "theorem"]}}},
             "then": {"required": ["preset"]}},
        ]},
    "report": {
        "type": "object", "required": ["schema", "scenario", "kind", "verdict", "checks", "notes"],
        "properties": {
            **_HEADER, "scenario": {"type": "string"}, "kind": {"enum": list(SCENARIO_KINDS)},
            "verdict": {"enum": ["pass", "fail", "shadow-pass"]},
            "checks": {"type": "array", "items": {
                "type": "object", "required": ["name", "verdict", "evidence"],
                "properties": {"name": {"type": "string"},
                               "verdict": {"enum": ["pass", "fail", "shadow-pass"]},
                               "evidence": {}}}},
            "notes": {"type": "array", "items": {"type": "string"}},
            "timing": {"type": "object"}}},
}
SCHEMAS["bimodule"] = {**SCHEMAS["complex"], "required": ["terms", "d", "factors"]}


def validate(doc: Any, kind: str) -> None:
    import jsonschema
    try:
        jsonschema.validate(doc, SCHEMAS[kind])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{kind} schema violation at {where}: {exc.message}") from None
