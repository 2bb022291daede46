"""JSON documents for systems, initial sets and matrix triples, plus schema access."""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .contracts import ContractFileError
from .satisfaction import AffineSystem, InitSet

__all__ = [
    "load_init",
    "load_system",
    "load_triple",
    "save_init",
    "save_system",
    "save_triple",
    "schema",
    "validate_document",
]


@lru_cache(maxsize=None)
def schema(name: str) -> dict:
    """Bundled JSON schema by short name, e.g. ``"contract"`` or ``"verdict"``."""
    text = resources.files("agcontracts").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def validate_document(doc, name: str) -> None:
    try:
        jsonschema.validate(doc, schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ContractFileError(f"{name} document invalid at {where}: {exc.message}") from exc


def _read(path, name):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContractFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    validate_document(doc, name)
    return doc


def _write(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _matrix(a):
    return [[float(v) for v in row] for row in np.atleast_2d(a)]


def load_system(path) -> AffineSystem:
    doc = _read(path, "system")
    try:
        return AffineSystem(doc["F"], doc["B"], doc["f"])
    except ValueError as exc:
        raise ContractFileError(f"{path}: {exc}") from exc


def save_system(sys: AffineSystem, path) -> None:
    _write(path, {"schema_version": "1", "F": _matrix(sys.state_matrix),
                  "B": _matrix(sys.input_matrix), "f": [float(v) for v in sys.offset]})


def load_init(path) -> InitSet:
    doc = _read(path, "initset")
    try:
        return InitSet(doc["P"], doc["q"])
    except ValueError as exc:
        raise ContractFileError(f"{path}: {exc}") from exc


def save_init(init: InitSet, path) -> None:
    _write(path, {"schema_version": "1", "P": _matrix(init.matrix),
                  "q": [float(v) for v in init.rhs]})


def load_triple(path):
    doc = _read(path, "triple")
    V1 = np.array(doc["V1"], dtype=float)
    V0 = np.array(doc["V0"], dtype=float)
    v0 = np.array(doc["v0"], dtype=float)
    if V1.ndim != 2 or V1.shape != V0.shape or V1.shape[0] != v0.shape[0]:
        raise ContractFileError(
            f"{path}: inconsistent shapes V1 {V1.shape}, V0 {V0.shape}, v0 {v0.shape}"
        )
    return V1, V0, v0


def save_triple(V1, V0, v0, path, label="") -> None:
    _write(path, {"schema_version": "1", "label": label, "V1": _matrix(V1),
                  "V0": _matrix(V0), "v0": [float(v) for v in v0]})
