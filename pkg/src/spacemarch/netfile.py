"""Reading and writing network description files (JSON).

Top-level sections: ``time``, ``vertices``, ``edges``, ``couplings``,
``boundaries`` and the optional ``retardation`` and ``paths``. Unknown keys
are rejected with the JSON path of the offending field.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from .kernels import DomainError, TimeGrid
from .network import Edge, NetworkError, NetworkModel, Vertex, validate_and_order
from .nonlinear import RetardationModel
from .signals import SignalError, signal_from_dict

__all__ = ["NetworkFileError", "model_from_dict", "model_to_dict", "load_model", "save_model", "dumps", "loads"]

TOP_KEYS = {"time", "vertices", "edges", "couplings", "boundaries", "retardation", "paths"}
EDGE_KEYS = {"id", "from", "to", "length", "kappa", "diameter", "cells", "velocity", "initial"}


class NetworkFileError(ValueError):
    """Malformed network description; the message names the failing field."""


def _keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise NetworkFileError(f"{where}: expected an object, got {type(obj).__name__}")
    extra = set(obj) - set(allowed)
    if extra:
        raise NetworkFileError(f"{where}: unknown keys {sorted(extra)}")
    for k in required:
        if k not in obj:
            raise NetworkFileError(f"{where}: missing required key {k!r}")


def _num(value, where, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise NetworkFileError(f"{where}: expected a finite number, got {value!r}")
    if integer and int(value) != value:
        raise NetworkFileError(f"{where}: expected an integer, got {value!r}")
    if positive and not value > 0:
        raise NetworkFileError(f"{where}: expected a positive number, got {value!r}")
    return int(value) if integer else float(value)


def _str(value, where):
    if not isinstance(value, str) or not value:
        raise NetworkFileError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _list(value, where):
    if not isinstance(value, list):
        raise NetworkFileError(f"{where}: expected a list, got {type(value).__name__}")
    return value


def _signal(d, where):
    try:
        return signal_from_dict(d, where)
    except SignalError as exc:
        raise NetworkFileError(str(exc)) from None


def model_from_dict(doc: dict) -> NetworkModel:
    _keys(doc, TOP_KEYS, "$", required=("time", "vertices", "edges", "boundaries"))
    _keys(doc["time"], {"T", "N"}, "time", required=("T", "N"))
    try:
        time = TimeGrid(_num(doc["time"]["T"], "time.T", positive=True),
                        _num(doc["time"]["N"], "time.N", positive=True, integer=True))
    except DomainError as exc:
        raise NetworkFileError(f"time: {exc}") from None

    vertices = []
    for k, v in enumerate(_list(doc["vertices"], "vertices")):
        where = f"vertices[{k}]"
        _keys(v, {"id", "kind"}, where, required=("id", "kind"))
        try:
            vertices.append(Vertex(_str(v["id"], where + ".id"), v["kind"]))
        except NetworkError as exc:
            raise NetworkFileError(f"{where}.kind: {exc}") from None

    edges = []
    for k, e in enumerate(_list(doc["edges"], "edges")):
        where = f"edges[{k}]"
        _keys(e, EDGE_KEYS, where, required=("id", "from", "to", "length", "cells", "velocity"))
        vel = e["velocity"]
        if isinstance(vel, list):
            vel = tuple(_num(x, f"{where}.velocity[{j}]", positive=True) for j, x in enumerate(vel))
        else:
            vel = _num(vel, where + ".velocity", positive=True)
        kw = {}
        for key in ("kappa", "diameter"):
            if key in e:
                kw[key] = _num(e[key], f"{where}.{key}", positive=True)
        if "initial" in e:
            kw["initial"] = _signal(e["initial"], where + ".initial")
        try:
            edges.append(Edge(
                id=_str(e["id"], where + ".id"),
                source=_str(e["from"], where + ".from"),
                target=_str(e["to"], where + ".to"),
                length=_num(e["length"], where + ".length", positive=True),
                cells=_num(e["cells"], where + ".cells", positive=True, integer=True),
                velocity=vel,
                **kw,
            ))
        except NetworkError as exc:
            raise NetworkFileError(f"{where}: {exc}") from None

    alpha = {}
    for k, c in enumerate(_list(doc.get("couplings", []), "couplings")):
        where = f"couplings[{k}]"
        _keys(c, {"vertex", "alpha"}, where, required=("vertex", "alpha"))
        vid = _str(c["vertex"], where + ".vertex")
        if vid in alpha:
            raise NetworkFileError(f"{where}.vertex: duplicate coupling for vertex {vid!r}")
        if not isinstance(c["alpha"], dict):
            raise NetworkFileError(f"{where}.alpha: expected an object mapping edge ids to weights")
        alpha[vid] = {eid: _num(a, f"{where}.alpha.{eid}") for eid, a in c["alpha"].items()}

    boundaries = {}
    for k, b in enumerate(_list(doc["boundaries"], "boundaries")):
        where = f"boundaries[{k}]"
        _keys(b, {"vertex", "signal"}, where, required=("vertex", "signal"))
        vid = _str(b["vertex"], where + ".vertex")
        if vid in boundaries:
            raise NetworkFileError(f"{where}.vertex: duplicate boundary for vertex {vid!r}")
        boundaries[vid] = _signal(b["signal"], where + ".signal")

    retardation = None
    if doc.get("retardation") is not None:
        r = doc["retardation"]
        where = "retardation"
        if not isinstance(r, dict) or r.get("type") not in ("linear", "quadratic"):
            raise NetworkFileError(f"{where}.type: expected 'linear' or 'quadratic'")
        try:
            if r["type"] == "linear":
                _keys(r, {"type", "kappa"}, where, required=("kappa",))
                retardation = RetardationModel(_num(r["kappa"], where + ".kappa", positive=True), 0.0)
            else:
                _keys(r, {"type", "a", "b"}, where, required=("a", "b"))
                retardation = RetardationModel(_num(r["a"], where + ".a"), _num(r["b"], where + ".b"))
        except DomainError as exc:
            raise NetworkFileError(f"{where}: {exc}") from None

    paths = {}
    if "paths" in doc:
        if not isinstance(doc["paths"], dict):
            raise NetworkFileError("paths: expected an object mapping names to edge id lists")
        for name, ids in doc["paths"].items():
            paths[name] = tuple(_str(x, f"paths.{name}[{j}]") for j, x in enumerate(_list(ids, f"paths.{name}")))

    model = NetworkModel(time, tuple(vertices), tuple(edges), alpha, boundaries, retardation, paths)
    validate_and_order(model)
    if retardation is not None:
        for e in edges:
            if e.kappa != retardation.a:
                raise NetworkError(f"edge {e.id}: kappa must equal the retardation coefficient a = {retardation.a}")
    return model


def model_to_dict(model: NetworkModel) -> dict:
    edges = []
    for e in model.edges:
        d = {"id": e.id, "from": e.source, "to": e.target, "length": e.length, "cells": int(e.cells)}
        if e.kappa is not None:
            d["kappa"] = e.kappa
        else:
            d["diameter"] = e.diameter
        d["velocity"] = list(e.velocity) if isinstance(e.velocity, tuple) else e.velocity
        if e.initial is not None:
            d["initial"] = e.initial.to_dict()
        edges.append(d)
    doc = {
        "time": {"T": model.time.T, "N": model.time.N},
        "vertices": [{"id": v.id, "kind": v.kind} for v in model.vertices],
        "edges": edges,
        "couplings": [{"vertex": vid, "alpha": dict(row)} for vid, row in model.alpha.items()],
        "boundaries": [{"vertex": vid, "signal": s.to_dict()} for vid, s in model.boundaries.items()],
    }
    if model.retardation is not None:
        doc["retardation"] = model.retardation.to_dict()
    if model.paths:
        doc["paths"] = {k: list(v) for k, v in model.paths.items()}
    return doc


def loads(text: str) -> NetworkModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFileError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_dict(doc)


def dumps(model: NetworkModel) -> str:
    return json.dumps(model_to_dict(model), indent=2)


def load_model(path) -> NetworkModel:
    return loads(Path(path).read_text())


def save_model(model: NetworkModel, path) -> None:
    Path(path).write_text(dumps(model) + "\n")
