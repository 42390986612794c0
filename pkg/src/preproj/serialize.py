"""JSON forms of quivers, modules, setups and reports."""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .exactlinalg import QQ, FieldSpec, Matrix, Subspace, format_scalar
from .quiver import LambdaModule, QuiverGraph, build_double_quiver, module
from .adapted import FiltrationSetup


class FormatError(ValueError):
    pass


def load_json(path: str | Path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None


def parse_scalar(v: Any, F: FieldSpec):
    if isinstance(v, bool) or not isinstance(v, (int, str)):
        raise FormatError(f"scalar {v!r} must be an integer or a string 'a' or 'a/b'")
    try:
        return F(Fraction(v) if isinstance(v, str) else v)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad scalar {v!r}: {exc}") from None


def fraction_str(v) -> str:
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def field_from_json(obj: Any) -> FieldSpec:
    if obj in (None, "rational"):
        return QQ
    if isinstance(obj, dict) and set(obj) == {"prime"}:
        try:
            return FieldSpec.prime(int(obj["prime"]))
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    raise FormatError(f"field must be 'rational' or {{'prime': p}}, got {obj!r}")


def field_to_json(F: FieldSpec) -> Any:
    return {"prime": F.characteristic} if F.is_prime_field else "rational"


def matrix_rows(m: Matrix) -> list[list]:
    return [[_scalar_out(v, m.field) for v in r] for r in m.data]


def _scalar_out(v, F: FieldSpec):
    if F.is_prime_field or Fraction(v).denominator == 1:
        return int(v)
    return format_scalar(v)


# quivers


def quiver_from_json(obj: Any) -> QuiverGraph:
    if not isinstance(obj, dict) or "edges" not in obj:
        raise FormatError("quiver JSON needs an 'edges' list")
    try:
        edges = [(str(e["id"]), str(e["source"]), str(e["target"])) for e in obj["edges"]]
    except (KeyError, TypeError):
        raise FormatError("each edge needs 'id', 'source' and 'target'") from None
    verts = [str(v) for v in obj.get("vertices", [])] or None
    return build_double_quiver(edges, verts)


def quiver_to_json(g: QuiverGraph) -> dict:
    edges = [
        {"id": a.id, "source": a.source, "target": a.target}
        for a in g.arrows.values()
        if a.sign == 1
    ]
    return {"vertices": list(g.vertices), "edges": edges}


# modules


def module_from_json(obj: Any, graph: QuiverGraph) -> LambdaModule:
    if not isinstance(obj, dict) or "dims" not in obj:
        raise FormatError("module JSON needs 'dims'")
    F = field_from_json(obj.get("field", "rational"))
    dims = obj["dims"]
    if not isinstance(dims, dict):
        raise FormatError("'dims' must map vertices to counts")
    for v in dims:
        if str(v) not in graph.vertices:
            raise FormatError(f"unknown vertex {v!r} in dims")
    maps = {}
    for h, rows in (obj.get("maps") or {}).items():
        if h not in graph.arrows:
            raise FormatError(f"unknown arrow {h!r}")
        maps[h] = [[parse_scalar(v, F) for v in r] for r in rows]
    m = module(graph, {str(v): int(d) for v, d in dims.items()}, None, F)
    built = {}
    for h, rows in maps.items():
        a = graph.arrows[h]
        r, c = m.dim(a.target), m.dim(a.source)
        if len(rows) != r or any(len(row) != c for row in rows):
            raise FormatError(f"map {h!r} must be {r} x {c}")
        built[h] = Matrix.from_rows(F, rows, cols=c) if r else Matrix.zeros(F, 0, c)
    return module(graph, m.dims, built, F)


def module_to_json(m: LambdaModule) -> dict:
    return {
        "field": field_to_json(m.field),
        "dims": {v: m.dim(v) for v in m.graph.vertices if m.dim(v)},
        "maps": {h: matrix_rows(mat) for h, mat in sorted(m.maps.items()) if not mat.is_zero()},
    }


# setups


def setup_from_json(obj: Any) -> FiltrationSetup:
    if not isinstance(obj, dict):
        raise FormatError("setup JSON must be an object")
    for key in ("n", "x", "W", "J"):
        if key not in obj:
            raise FormatError(f"setup JSON lacks {key!r}")
    F = field_from_json(obj.get("field", "rational"))
    n = int(obj["n"])
    x_rows = obj["x"]
    if len(x_rows) != n or any(len(r) != n for r in x_rows):
        raise FormatError(f"x must be {n} x {n}")
    x = Matrix.from_rows(F, [[parse_scalar(v, F) for v in r] for r in x_rows], cols=n)
    vecs = []
    for w in obj["W"]:
        if len(w) != n:
            raise FormatError(f"W vectors must have length {n}")
        vecs.append(tuple(parse_scalar(v, F) for v in w))
    W = Subspace.span(F, n, vecs)
    if "k" in obj and int(obj["k"]) != W.dim:
        raise FormatError(f"k = {obj['k']} but W has dimension {W.dim}")
    return FiltrationSetup(x, W, frozenset(int(p) for p in obj["J"]))


def setup_to_json(s: FiltrationSetup) -> dict:
    out = {
        "n": s.n,
        "k": s.k,
        "x": matrix_rows(s.x),
        "W": [[_scalar_out(v, s.field) for v in b] for b in s.W.basis],
        "J": sorted(s.J),
    }
    if s.field.is_prime_field:
        out["field"] = field_to_json(s.field)
    return out


def dumps(obj: Any) -> str:
    """Deterministic JSON text."""
    return json.dumps(obj, sort_keys=True, indent=2)
