"""Deciding whether a cascade of two linear contracts refines a third.

For contracts ``c1`` (input ``d``, output ``z``), ``c2`` (input ``z``,
output ``y``) and ``c`` (input ``d``, output ``y``) the cascade refines ``c``
exactly when three families of implications hold:

``D``
    ``c``'s assumptions imply ``c1``'s assumptions.
``Otimes``
    ``c``'s assumptions and ``c1``'s guarantees imply ``c2``'s assumptions.
``Omega``
    ``c``'s assumptions and both guarantees imply ``c``'s guarantees.

Each conclusion row becomes one LP that maximizes the row's violation over the
premise polyhedron.  The cascade refines ``c`` iff all of those optima are
non-positive, so exactly ``s_A + s_B + s_J`` LPs are solved.

When an upstream contract only constrains its output one step late (a delayed
observer), the ``Otimes`` and ``Omega`` families are checked on a two-step
window: premises at ``k = 0, 1`` and the conclusion on samples ``1, 2``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .contracts import CascadeTriple, LinearContract, output_now_is_zero, split_guarantees
from .lp import LPProblem, Status, feasibility_tolerance, solve
from .polyhedra import EnumerationLimitError, enumerate_v_rep

__all__ = [
    "DEFAULT_TOL",
    "FAMILIES",
    "ExtendabilityVerdict",
    "HorizonConfig",
    "ImplicationLP",
    "ImplicationLPSet",
    "Layout",
    "RefinementVerdict",
    "RowResult",
    "build_family",
    "build_implication_D",
    "build_implication_Omega",
    "build_implication_otimes",
    "check_extendability",
    "check_refinement",
    "delayed_output",
    "oracle_check_implication",
    "oracle_implication_values",
    "suggest_horizons",
    "theorem_triples",
    "verify_witness",
]

DEFAULT_TOL = 1e-7
FAMILIES = ("D", "Otimes", "Omega")


@dataclass(frozen=True)
class HorizonConfig:
    """Window length for the ``Otimes`` (ii) and ``Omega`` (iii) families."""

    horizon_ii: int = 1
    horizon_iii: int = 1

    def __post_init__(self):
        for name in ("horizon_ii", "horizon_iii"):
            if getattr(self, name) not in (1, 2):
                raise ValueError(f"{name} must be 1 or 2, got {getattr(self, name)!r}")


class Layout:
    """Stacked variable vector ``(s_0, ..., s_H)`` for each named signal in turn."""

    def __init__(self, dims, horizon):
        self.dims = dict(dims)
        self.horizon = horizon
        self._start = {}
        pos = 0
        for name, dim in self.dims.items():
            for k in range(horizon + 1):
                self._start[name, k] = pos
                pos += dim
        self.size = pos

    def index(self, name, k):
        start = self._start[name, k]
        return slice(start, start + self.dims[name])

    def names(self):
        return [f"{name}{k}" for name in self.dims for k in range(self.horizon + 1)]

    def unpack(self, x):
        return {f"{name}{k}": np.asarray(x)[self.index(name, k)]
                for name in self.dims for k in range(self.horizon + 1)}

    def step_rows(self, signals, next_matrix, now_matrix, k):
        """Rows of ``next_matrix @ [s(k+1)...] + now_matrix @ [s(k)...]`` in this layout."""
        rows = np.zeros((next_matrix.shape[0], self.size))
        col = 0
        for name in signals:
            dim = self.dims[name]
            rows[:, self.index(name, k + 1)] += next_matrix[:, col:col + dim]
            rows[:, self.index(name, k)] += now_matrix[:, col:col + dim]
            col += dim
        return rows


@dataclass(frozen=True, eq=False)
class ImplicationLP:
    """One conclusion row: ``theta = max(objective @ x) + offset`` over the premises."""

    family: str
    row: int
    problem: LPProblem
    offset: float
    layout: Layout


@dataclass(frozen=True, eq=False)
class ImplicationLPSet:
    family: str
    layout: Layout
    problems: list  # of ImplicationLP


def _premises(t: CascadeTriple, layout: Layout, steps: int, with_c1: bool, with_c2: bool):
    blocks, rhs = [], []
    for k in range(steps):
        blocks.append(layout.step_rows(["d"], t.c.assume_next, t.c.assume_now, k))
        rhs.append(t.c.assume_rhs)
        if with_c1:
            blocks.append(layout.step_rows(["d", "z"], t.c1.guar_next, t.c1.guar_now, k))
            rhs.append(t.c1.guar_rhs)
        if with_c2:
            blocks.append(layout.step_rows(["z", "y"], t.c2.guar_next, t.c2.guar_now, k))
            rhs.append(t.c2.guar_rhs)
    return np.vstack(blocks), np.concatenate(rhs)


def _check_row(n_rows, index, family):
    if not 0 <= index < n_rows:
        raise IndexError(f"{family} row {index} out of range (family has {n_rows} rows)")


def build_implication_D(t: CascadeTriple, i: int) -> ImplicationLP:
    """Row ``i`` (0-based) of ``A1 d1 + A0 d0 - a0`` over ``c``'s assumptions."""
    _check_row(t.c1.n_assume, i, "D")
    layout = Layout({"d": t.n_d}, 1)
    A, b = _premises(t, layout, 1, False, False)
    obj = layout.step_rows(["d"], t.c1.assume_next[i:i + 1], t.c1.assume_now[i:i + 1], 0)[0]
    return ImplicationLP("D", i, LPProblem(obj, A, b), -float(t.c1.assume_rhs[i]), layout)


def build_implication_otimes(t: CascadeTriple, j: int, h: HorizonConfig = HorizonConfig()) -> ImplicationLP:
    """Row ``j`` of ``B1 z_H + B0 z_{H-1} - b0`` over ``c``'s assumptions and ``c1``'s guarantees."""
    _check_row(t.c2.n_assume, j, "Otimes")
    H = h.horizon_ii
    layout = Layout({"d": t.n_d, "z": t.n_z}, H)
    A, b = _premises(t, layout, H, True, False)
    obj = layout.step_rows(["z"], t.c2.assume_next[j:j + 1], t.c2.assume_now[j:j + 1], H - 1)[0]
    return ImplicationLP("Otimes", j, LPProblem(obj, A, b), -float(t.c2.assume_rhs[j]), layout)


def build_implication_Omega(t: CascadeTriple, l: int, h: HorizonConfig = HorizonConfig()) -> ImplicationLP:
    """Row ``l`` of ``c``'s guarantee violation over all three premise families."""
    _check_row(t.c.n_guar, l, "Omega")
    H = h.horizon_iii
    layout = Layout({"d": t.n_d, "z": t.n_z, "y": t.n_y}, H)
    A, b = _premises(t, layout, H, True, True)
    obj = layout.step_rows(["d", "y"], t.c.guar_next[l:l + 1], t.c.guar_now[l:l + 1], H - 1)[0]
    return ImplicationLP("Omega", l, LPProblem(obj, A, b), -float(t.c.guar_rhs[l]), layout)


def build_family(t: CascadeTriple, family: str, h: HorizonConfig = HorizonConfig()) -> ImplicationLPSet:
    if family == "D":
        problems = [build_implication_D(t, i) for i in range(t.c1.n_assume)]
        layout = Layout({"d": t.n_d}, 1)
    elif family == "Otimes":
        problems = [build_implication_otimes(t, j, h) for j in range(t.c2.n_assume)]
        layout = Layout({"d": t.n_d, "z": t.n_z}, h.horizon_ii)
    elif family == "Omega":
        problems = [build_implication_Omega(t, l, h) for l in range(t.c.n_guar)]
        layout = Layout({"d": t.n_d, "z": t.n_z, "y": t.n_y}, h.horizon_iii)
    else:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    return ImplicationLPSet(family, layout, problems)


@dataclass(frozen=True, eq=False)
class RowResult:
    family: str
    row: int
    status: Status
    theta: float
    witness: np.ndarray | None = None
    ray: np.ndarray | None = None
    layout: Layout | None = field(default=None, repr=False)

    def to_dict(self):
        doc = {"family": self.family, "row": self.row, "status": self.status.value,
               "theta": _ext(self.theta)}
        if self.witness is not None:
            doc["witness"] = {k: v.tolist() for k, v in self.layout.unpack(self.witness).items()}
        if self.ray is not None:
            doc["ray"] = {k: v.tolist() for k, v in self.layout.unpack(self.ray).items()}
        return doc


def _ext(v):
    if v == np.inf:
        return "+inf"
    if v == -np.inf:
        return "-inf"
    return float(v)


def _rho(values):
    return float(np.max(values)) if len(values) else -np.inf


def _solve_row(imp: ImplicationLP, solver, tol) -> RowResult:
    out = solver(imp.problem)
    if out.status is Status.INFEASIBLE:
        return RowResult(imp.family, imp.row, out.status, -np.inf, layout=imp.layout)
    if out.status is Status.UNBOUNDED:
        return RowResult(imp.family, imp.row, out.status, np.inf, ray=out.ray, layout=imp.layout)
    theta = float(out.value) + imp.offset
    witness = out.point if theta > tol else None
    return RowResult(imp.family, imp.row, out.status, theta, witness=witness, layout=imp.layout)


@dataclass(frozen=True, eq=False)
class RefinementVerdict:
    holds: bool
    theta_D: np.ndarray
    theta_otimes: np.ndarray
    theta_Omega: np.ndarray
    rows: list
    lp_count: int
    tolerance: float
    horizons: HorizonConfig

    @property
    def rho_D(self) -> float:
        return _rho(self.theta_D)

    @property
    def rho_otimes(self) -> float:
        return _rho(self.theta_otimes)

    @property
    def rho_Omega(self) -> float:
        return _rho(self.theta_Omega)

    @property
    def witnesses(self) -> dict:
        return {(r.family, r.row): r.witness for r in self.rows if r.witness is not None}

    @property
    def unbounded_rows(self) -> list:
        return [(r.family, r.row) for r in self.rows if r.status is Status.UNBOUNDED]

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "aggregate": {
                "holds": bool(self.holds),
                "rho_D": _ext(self.rho_D),
                "rho_otimes": _ext(self.rho_otimes),
                "rho_Omega": _ext(self.rho_Omega),
                "lp_count": self.lp_count,
                "tolerance": self.tolerance,
                "horizon_ii": self.horizons.horizon_ii,
                "horizon_iii": self.horizons.horizon_iii,
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def check_refinement(t: CascadeTriple, h: HorizonConfig = HorizonConfig(),
                     tol: float = DEFAULT_TOL, solver=solve) -> RefinementVerdict:
    """Decide whether ``t.c1`` cascaded with ``t.c2`` refines ``t.c``.

    ``solver`` maps an :class:`LPProblem` to an :class:`LPOutcome`; it is
    called exactly once per conclusion row.  An infeasible premise makes the
    row hold vacuously (theta ``-inf``); an unbounded LP fails the row
    (theta ``+inf``) and records the ray.
    """
    rows = []
    theta = {}
    count = 0
    for family in FAMILIES:
        results = []
        for imp in build_family(t, family, h).problems:
            results.append(_solve_row(imp, solver, tol))
            count += 1
        rows.extend(results)
        theta[family] = np.array([r.theta for r in results], dtype=float)
    holds = all(r.theta <= tol for r in rows)
    return RefinementVerdict(holds, theta["D"], theta["Otimes"], theta["Omega"],
                             rows, count, tol, h)


def delayed_output(c: LinearContract) -> bool:
    """True when some output sample is constrained only one step after it occurs."""
    blocks = split_guarantees(c)
    if c.output_dim == 0 or c.n_guar == 0:
        return False
    if output_now_is_zero(c):
        return True
    late = ~np.any(blocks.now_y, axis=0) & np.any(blocks.next_y, axis=0)
    return bool(np.any(late))


def suggest_horizons(t: CascadeTriple) -> HorizonConfig:
    """Two-step windows for the families downstream of a delayed guarantee."""
    ii = 2 if delayed_output(t.c1) else 1
    iii = 2 if (delayed_output(t.c1) or delayed_output(t.c2)) else 1
    return HorizonConfig(ii, iii)


def theorem_triples(t: CascadeTriple):
    """The three stacked ``(V1, V0, v0)`` triples whose extendability the
    refinement equivalence relies on: ``c``'s assumptions, then with ``c1``'s
    guarantees, then with both guarantees."""
    c, c1, c2 = t.c, t.c1, t.c2
    n_d, n_z, n_y = t.n_d, t.n_z, t.n_y
    g, hh = split_guarantees(c1), split_guarantees(c2)
    s_c, s_g, s_h = c.n_assume, c1.n_guar, c2.n_guar

    first = (c.assume_next, c.assume_now, c.assume_rhs)

    def two(C, Gd, Gz):
        return np.block([[C, np.zeros((s_c, n_z))], [Gd, Gz]])

    second = (two(c.assume_next, g.next_d, g.next_y),
              two(c.assume_now, g.now_d, g.now_y),
              np.concatenate([c.assume_rhs, c1.guar_rhs]))

    def three(C, Gd, Gz, Hz, Hy):
        return np.block([
            [C, np.zeros((s_c, n_z)), np.zeros((s_c, n_y))],
            [Gd, Gz, np.zeros((s_g, n_y))],
            [np.zeros((s_h, n_d)), Hz, Hy],
        ])

    third = (three(c.assume_next, g.next_d, g.next_y, hh.next_d, hh.next_y),
             three(c.assume_now, g.now_d, g.now_y, hh.now_d, hh.now_y),
             np.concatenate([c.assume_rhs, c1.guar_rhs, c2.guar_rhs]))
    return [first, second, third]


@dataclass(frozen=True, eq=False)
class ExtendabilityVerdict:
    """``extendable`` is ``None`` when the check could not be carried out."""

    extendable: bool | None
    method: str  # "exact_vrep" or "unsupported_dimension"
    dimension: int
    counterexample: tuple | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        doc = {"extendable": self.extendable, "method": self.method,
               "dimension": self.dimension, "detail": self.detail}
        if self.counterexample is not None:
            doc["counterexample"] = {"u0": self.counterexample[0].tolist(),
                                     "u1": self.counterexample[1].tolist()}
        return doc


def _extends(V1, V0, v0, w, solver):
    return not solver(LPProblem(np.zeros(V1.shape[1]), V1, v0 - V0 @ w)).is_infeasible


def check_extendability(V1, V0, v0, solver=solve) -> ExtendabilityVerdict:
    """Check that every one-step-feasible pair ``(u0, u1)`` admits a next sample.

    The pairs form ``P = {(u0, u1) : V1 u1 + V0 u0 <= v0}``.  Its projection on
    ``u1`` is generated by the projected vertices and rays of ``P``, and the
    set of extendable ``u1`` is convex, so it suffices to test each projected
    vertex for membership and each projected ray for membership in the
    recession cone.
    """
    V1 = np.atleast_2d(np.asarray(V1, dtype=float))
    V0 = np.atleast_2d(np.asarray(V0, dtype=float))
    v0 = np.asarray(v0, dtype=float).reshape(-1)
    if V1.shape != V0.shape or V1.shape[0] != v0.shape[0]:
        raise ValueError(f"inconsistent shapes V1 {V1.shape}, V0 {V0.shape}, v0 {v0.shape}")
    p = V1.shape[1]
    dim = 2 * p
    try:
        P = enumerate_v_rep(np.hstack([V0, V1]), v0)
    except EnumerationLimitError as exc:
        return ExtendabilityVerdict(None, "unsupported_dimension", dim, detail=str(exc))
    if P.is_empty:
        return ExtendabilityVerdict(True, "exact_vrep", dim, detail="no feasible pair")
    for x in P.vertices:
        u0, u1 = x[:p], x[p:]
        if not _extends(V1, V0, v0, u1, solver):
            return ExtendabilityVerdict(False, "exact_vrep", dim, (u0, u1),
                                        "a vertex pair has no feasible successor")
    for r in P.rays:
        if _extends(V1, V0, np.zeros_like(v0), r[p:], solver):
            continue
        base = P.vertices[0]
        scale = 1.0
        for _ in range(80):
            x = base + scale * r
            if not _extends(V1, V0, v0, x[p:], solver):
                return ExtendabilityVerdict(False, "exact_vrep", dim, (x[:p], x[p:]),
                                            "pairs far along a recession ray have no successor")
            scale *= 2.0
        return ExtendabilityVerdict(False, "exact_vrep", dim, None,
                                    "a recession ray leaves the extendable set")
    return ExtendabilityVerdict(True, "exact_vrep", dim)


def oracle_implication_values(premise, conclusion) -> np.ndarray:
    """Supremum of each conclusion row's violation over the premise polyhedron,
    computed from its vertices and rays rather than by LP."""
    M, m_rhs = premise
    C, c_rhs = conclusion
    C = np.atleast_2d(np.asarray(C, dtype=float))
    c_rhs = np.asarray(c_rhs, dtype=float).reshape(-1)
    P = enumerate_v_rep(M, m_rhs)
    return np.array([P.max_linear(row) - rhs for row, rhs in zip(C, c_rhs)])


def oracle_check_implication(premise, conclusion, tol: float = DEFAULT_TOL) -> bool:
    """``premise`` implies every row of ``conclusion`` (both ``(matrix, rhs)`` pairs)."""
    return bool(np.all(oracle_implication_values(premise, conclusion) <= tol))


def verify_witness(row: RowResult, imp: ImplicationLP, tol: float = 1e-8) -> bool:
    """Re-check a positive-theta witness against the raw premise constraints."""
    x = row.witness
    feasible = imp.problem.max_violation(x) <= feasibility_tolerance(imp.problem.rhs)
    value = float(imp.problem.objective @ x) + imp.offset
    return feasible and abs(value - row.theta) <= tol * (1.0 + abs(row.theta))
