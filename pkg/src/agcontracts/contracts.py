"""Linear assume/guarantee contracts.

A linear contract with input ``d`` (dimension ``n_d``) and output ``y``
(dimension ``n_y``) assumes, for every time step ``k``::

    A1 @ d(k+1) + A0 @ d(k) <= a0

and guarantees::

    G1 @ [d(k+1); y(k+1)] + G0 @ [d(k); y(k)] <= g0

Zero assumption rows mean "assume nothing"; zero guarantee rows mean
"guarantee nothing".
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "SCHEMA_VERSION",
    "CascadeTriple",
    "ContractError",
    "ContractFileError",
    "GuaranteeBlocks",
    "LinearContract",
    "contract_from_dict",
    "contract_to_dict",
    "load_contract",
    "output_now_is_zero",
    "save_contract",
    "split_guarantees",
    "validate",
]

SCHEMA_VERSION = "1"


class ContractError(ValueError):
    """A contract's matrices are inconsistent or contain non-finite data."""


class ContractFileError(ValueError):
    """A contract file could not be parsed or does not follow the schema."""


def _matrix(value, cols):
    a = np.array(value, dtype=float)
    if a.size == 0 and a.ndim != 2:
        a = a.reshape(0, cols)
    a.setflags(write=False)
    return a


def _vector(value):
    a = np.array(value, dtype=float).reshape(-1)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LinearContract:
    input_dim: int
    output_dim: int
    assume_next: np.ndarray
    assume_now: np.ndarray
    assume_rhs: np.ndarray
    guar_next: np.ndarray
    guar_now: np.ndarray
    guar_rhs: np.ndarray
    label: str = ""

    def __post_init__(self):
        n_d, n_y = int(self.input_dim), int(self.output_dim)
        object.__setattr__(self, "input_dim", n_d)
        object.__setattr__(self, "output_dim", n_y)
        for name, cols in (("assume_next", n_d), ("assume_now", n_d),
                           ("guar_next", n_d + n_y), ("guar_now", n_d + n_y)):
            object.__setattr__(self, name, _matrix(getattr(self, name), cols))
        for name in ("assume_rhs", "guar_rhs"):
            object.__setattr__(self, name, _vector(getattr(self, name)))
        validate(self)

    @property
    def n_assume(self) -> int:
        return self.assume_rhs.shape[0]

    @property
    def n_guar(self) -> int:
        return self.guar_rhs.shape[0]

    def replace(self, **changes) -> "LinearContract":
        fields = dict(
            input_dim=self.input_dim, output_dim=self.output_dim,
            assume_next=self.assume_next, assume_now=self.assume_now,
            assume_rhs=self.assume_rhs, guar_next=self.guar_next,
            guar_now=self.guar_now, guar_rhs=self.guar_rhs, label=self.label,
        )
        fields.update(changes)
        return LinearContract(**fields)

    def __eq__(self, other):
        if not isinstance(other, LinearContract):
            return NotImplemented
        return (
            self.input_dim == other.input_dim
            and self.output_dim == other.output_dim
            and self.label == other.label
            and all(
                np.array_equal(getattr(self, f), getattr(other, f))
                for f in ("assume_next", "assume_now", "assume_rhs",
                          "guar_next", "guar_now", "guar_rhs")
            )
        )

    __hash__ = None

    @classmethod
    def empty(cls, input_dim, output_dim, label=""):
        """The contract that assumes nothing and guarantees nothing."""
        return cls(input_dim, output_dim, np.zeros((0, input_dim)), np.zeros((0, input_dim)),
                   np.zeros(0), np.zeros((0, input_dim + output_dim)),
                   np.zeros((0, input_dim + output_dim)), np.zeros(0), label)


def validate(c: LinearContract) -> None:
    """Raise :class:`ContractError` on the first violated shape or finiteness rule."""
    n_d, n_y = c.input_dim, c.output_dim
    if n_d < 0 or n_y < 0:
        raise ContractError(f"dimensions must be non-negative, got n_d={n_d}, n_y={n_y}")
    s_a = c.assume_next.shape[0] if c.assume_next.ndim == 2 else -1
    checks = [
        ("assume_next", c.assume_next, (s_a, n_d)),
        ("assume_now", c.assume_now, (s_a, n_d)),
        ("assume_rhs", c.assume_rhs, (s_a,)),
    ]
    s_g = c.guar_next.shape[0] if c.guar_next.ndim == 2 else -1
    checks += [
        ("guar_next", c.guar_next, (s_g, n_d + n_y)),
        ("guar_now", c.guar_now, (s_g, n_d + n_y)),
        ("guar_rhs", c.guar_rhs, (s_g,)),
    ]
    for name, arr, shape in checks:
        if arr.shape != shape:
            raise ContractError(f"{name} has shape {arr.shape}, expected {shape}")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            raise ContractError(f"{name} has a non-finite entry at index {tuple(int(i) for i in bad[0])}")


@dataclass(frozen=True, eq=False)
class GuaranteeBlocks:
    next_d: np.ndarray
    now_d: np.ndarray
    next_y: np.ndarray
    now_y: np.ndarray


def split_guarantees(c: LinearContract) -> GuaranteeBlocks:
    """Split ``G1``/``G0`` into their input and output column blocks."""
    k = c.input_dim
    return GuaranteeBlocks(
        next_d=c.guar_next[:, :k], now_d=c.guar_now[:, :k],
        next_y=c.guar_next[:, k:], now_y=c.guar_now[:, k:],
    )


def output_now_is_zero(c: LinearContract) -> bool:
    """True when no guarantee row depends on the current output sample."""
    return not np.any(split_guarantees(c).now_y)


@dataclass(frozen=True)
class CascadeTriple:
    """Upstream contract ``c1`` feeding ``c2``, checked against ``c``."""

    c1: LinearContract
    c2: LinearContract
    c: LinearContract

    def __post_init__(self):
        if self.c1.output_dim != self.c2.input_dim:
            raise ContractError(
                f"c1 output dimension {self.c1.output_dim} != c2 input dimension {self.c2.input_dim}"
            )
        if self.c1.input_dim != self.c.input_dim:
            raise ContractError(
                f"c1 input dimension {self.c1.input_dim} != c input dimension {self.c.input_dim}"
            )
        if self.c2.output_dim != self.c.output_dim:
            raise ContractError(
                f"c2 output dimension {self.c2.output_dim} != c output dimension {self.c.output_dim}"
            )

    @property
    def n_d(self) -> int:
        return self.c.input_dim

    @property
    def n_z(self) -> int:
        return self.c1.output_dim

    @property
    def n_y(self) -> int:
        return self.c.output_dim


def _rows(a):
    return [[float(v) for v in row] for row in a]


def contract_to_dict(c: LinearContract) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "label": c.label,
        "n_d": c.input_dim,
        "n_y": c.output_dim,
        "assume": {"A1": _rows(c.assume_next), "A0": _rows(c.assume_now),
                   "a0": [float(v) for v in c.assume_rhs]},
        "guarantee": {"G1": _rows(c.guar_next), "G0": _rows(c.guar_now),
                      "g0": [float(v) for v in c.guar_rhs]},
    }


def _field(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise ContractFileError(f"missing field '{where}{key}'")
    return doc[key]


def contract_from_dict(doc) -> LinearContract:
    version = _field(doc, "schema_version", "")
    if str(version) != SCHEMA_VERSION:
        raise ContractFileError(
            f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION!r})"
        )
    n_d = _field(doc, "n_d", "")
    n_y = _field(doc, "n_y", "")
    assume = _field(doc, "assume", "")
    guarantee = _field(doc, "guarantee", "")
    values = {}
    for section, prefix, keys in ((assume, "assume.", ("A1", "A0", "a0")),
                                  (guarantee, "guarantee.", ("G1", "G0", "g0"))):
        for key in keys:
            values[key] = _field(section, key, prefix)
    try:
        return LinearContract(
            input_dim=int(n_d), output_dim=int(n_y),
            assume_next=values["A1"], assume_now=values["A0"], assume_rhs=values["a0"],
            guar_next=values["G1"], guar_now=values["G0"], guar_rhs=values["g0"],
            label=str(doc.get("label", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ContractError):
            raise ContractFileError(str(exc)) from exc
        raise ContractFileError(f"malformed matrix data: {exc}") from exc


def save_contract(c: LinearContract, path) -> None:
    # json writes floats with repr(), which round-trips exactly
    Path(path).write_text(json.dumps(contract_to_dict(c), indent=2) + "\n", encoding="utf-8")


def load_contract(path) -> LinearContract:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ContractFileError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return contract_from_dict(doc)
