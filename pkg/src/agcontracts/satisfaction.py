"""Checking that a deterministic affine system implements a linear contract.

The system is ``y(k+1) = F y(k) + B z(k) + f`` driven by an input ``z`` that
satisfies the contract's assumptions.  Guarantee rows split into

* current-slice rows, whose ``G1`` part is zero, so the row constrains only
  ``(z(k), y(k))``; together they form a candidate invariant ``I``;
* two-slice rows, which also involve ``(z(k+1), y(k+1))``.

Satisfaction follows by induction on ``k`` once the following LPs all have
non-positive optima:

base
    every current-slice row holds on the initial set;
step
    from any ``(z, y)`` in ``I``, any assumed successor input ``z+`` and the
    forced successor output ``y+``, each current-slice row holds at
    ``(z+, y+)`` and each two-slice row holds on the pair.

The step LP over-approximates the reachable set by ``I``, so a pass is sound;
a failure may be conservative when ``I`` is not inductive on its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .contracts import LinearContract
from .lp import LPProblem, Status, solve
from .polyhedra import enumerate_v_rep
from .refinement import DEFAULT_TOL, Layout, RowResult, _ext, _rho

__all__ = [
    "AffineSystem",
    "InitSet",
    "SatisfactionLP",
    "SatisfactionVerdict",
    "build_theta_base",
    "build_theta_step",
    "check_satisfaction",
    "current_slice_rows",
    "simulate_under_assumptions",
]


@dataclass(frozen=True, eq=False)
class AffineSystem:
    state_matrix: np.ndarray
    input_matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.array(self.state_matrix, dtype=float))
        B = np.array(self.input_matrix, dtype=float)
        f = np.array(self.offset, dtype=float).reshape(-1)
        n_y = f.shape[0]
        if B.ndim < 2:
            B = B.reshape(n_y, -1)
        if F.shape != (n_y, n_y):
            raise ValueError(f"state_matrix has shape {F.shape}, expected {(n_y, n_y)}")
        if B.shape[0] != n_y:
            raise ValueError(f"input_matrix has {B.shape[0]} rows, expected {n_y}")
        for name, arr in (("state_matrix", F), ("input_matrix", B), ("offset", f)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite entries")
            arr.setflags(write=False)
        object.__setattr__(self, "state_matrix", F)
        object.__setattr__(self, "input_matrix", B)
        object.__setattr__(self, "offset", f)

    @property
    def state_dim(self) -> int:
        return self.offset.shape[0]

    @property
    def input_dim(self) -> int:
        return self.input_matrix.shape[1]

    def step(self, y, z):
        return self.state_matrix @ y + self.input_matrix @ z + self.offset


@dataclass(frozen=True, eq=False)
class InitSet:
    """Initial pairs ``{(z(0), y(0)) : matrix @ [z(0); y(0)] <= rhs}``."""

    matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        rhs = np.array(self.rhs, dtype=float).reshape(-1)
        P = np.array(self.matrix, dtype=float)
        if P.size == 0 and not (P.ndim == 2 and P.shape[0] == rhs.shape[0]):
            P = P.reshape(rhs.shape[0], 0)
        if P.ndim != 2 or P.shape[0] != rhs.shape[0]:
            raise ValueError(f"init matrix shape {P.shape} does not match rhs length {rhs.shape[0]}")
        object.__setattr__(self, "matrix", P)
        object.__setattr__(self, "rhs", rhs)


def _check_dims(sys: AffineSystem, c: LinearContract):
    if c.input_dim != sys.input_dim or c.output_dim != sys.state_dim:
        raise ValueError(
            f"contract is {c.input_dim}->{c.output_dim} but system is "
            f"{sys.input_dim}->{sys.state_dim}"
        )


def current_slice_rows(c: LinearContract) -> np.ndarray:
    """Indices of guarantee rows that only involve the current sample."""
    return np.flatnonzero(~np.any(c.guar_next, axis=1))


@dataclass(frozen=True, eq=False)
class SatisfactionLP:
    family: str  # "base" or "step"
    row: int
    problem: LPProblem
    offset: float
    layout: Layout


def build_theta_base(sys: AffineSystem, c: LinearContract, init: InitSet, row: int):
    """Base-case LP for guarantee ``row``, or ``None`` when the row is not a
    current-slice row (its first instance is covered by the step LP)."""
    _check_dims(sys, c)
    if not 0 <= row < c.n_guar:
        raise IndexError(f"guarantee row {row} out of range ({c.n_guar} rows)")
    if init.matrix.shape[1] != c.input_dim + c.output_dim:
        raise ValueError(f"init set has {init.matrix.shape[1]} columns, expected "
                         f"{c.input_dim + c.output_dim}")
    if np.any(c.guar_next[row]):
        return None
    layout = Layout({"zy": c.input_dim + c.output_dim}, 0)
    problem = LPProblem(c.guar_now[row], init.matrix, init.rhs)
    return SatisfactionLP("base", row, problem, -float(c.guar_rhs[row]), layout)


def build_theta_step(sys: AffineSystem, c: LinearContract, row: int) -> SatisfactionLP:
    _check_dims(sys, c)
    if not 0 <= row < c.n_guar:
        raise IndexError(f"guarantee row {row} out of range ({c.n_guar} rows)")
    n_z, n_y = c.input_dim, c.output_dim
    layout = Layout({"z": n_z, "y": n_y}, 1)
    n = layout.size
    blocks, rhs = [], []

    hyp = current_slice_rows(c)
    if hyp.size:
        none = np.zeros((hyp.size, n_z + n_y))
        blocks.append(layout.step_rows(["z", "y"], none, c.guar_now[hyp], 0))
        rhs.append(c.guar_rhs[hyp])

    blocks.append(layout.step_rows(["z"], c.assume_next, c.assume_now, 0))
    rhs.append(c.assume_rhs)

    # y+ - F y - B z == f as a pair of inequalities
    dyn = np.zeros((n_y, n))
    dyn[:, layout.index("y", 1)] = np.eye(n_y)
    dyn[:, layout.index("y", 0)] -= sys.state_matrix
    dyn[:, layout.index("z", 0)] -= sys.input_matrix
    blocks += [dyn, -dyn]
    rhs += [sys.offset, -sys.offset]

    A = np.vstack(blocks) if blocks else np.zeros((0, n))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    g1, g0 = c.guar_next[row:row + 1], c.guar_now[row:row + 1]
    if np.any(g1):
        obj = layout.step_rows(["z", "y"], g1, g0, 0)[0]
    else:
        # the same row one step later, i.e. on (z+, y+)
        obj = layout.step_rows(["z", "y"], g0, np.zeros_like(g0), 0)[0]
    return SatisfactionLP("step", row, LPProblem(obj, A, b), -float(c.guar_rhs[row]), layout)


@dataclass(frozen=True, eq=False)
class SatisfactionVerdict:
    holds: bool
    theta_base: np.ndarray  # -inf for rows without a base LP
    theta_step: np.ndarray
    rows: list
    vacuous_base_rows: list
    lp_count: int
    tolerance: float

    @property
    def witnesses(self) -> dict:
        return {(r.family, r.row): r.witness for r in self.rows if r.witness is not None}

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "aggregate": {
                "holds": bool(self.holds),
                "theta_base_max": _ext(_rho(self.theta_base)),
                "theta_step_max": _ext(_rho(self.theta_step)),
                "vacuous_base_rows": list(self.vacuous_base_rows),
                "lp_count": self.lp_count,
                "tolerance": self.tolerance,
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _solve(lp: SatisfactionLP, solver, tol) -> RowResult:
    out = solver(lp.problem)
    if out.status is Status.INFEASIBLE:
        return RowResult(lp.family, lp.row, out.status, -np.inf, layout=lp.layout)
    if out.status is Status.UNBOUNDED:
        return RowResult(lp.family, lp.row, out.status, np.inf, ray=out.ray, layout=lp.layout)
    theta = float(out.value) + lp.offset
    return RowResult(lp.family, lp.row, out.status, theta,
                     witness=out.point if theta > tol else None, layout=lp.layout)


def check_satisfaction(sys: AffineSystem, c: LinearContract, init: InitSet,
                       tol: float = DEFAULT_TOL, solver=solve) -> SatisfactionVerdict:
    rows, vacuous = [], []
    theta_base = np.full(c.n_guar, -np.inf)
    theta_step = np.full(c.n_guar, -np.inf)
    for r in range(c.n_guar):
        lp = build_theta_base(sys, c, init, r)
        if lp is None:
            vacuous.append(r)
            continue
        res = _solve(lp, solver, tol)
        theta_base[r] = res.theta
        rows.append(res)
    for r in range(c.n_guar):
        res = _solve(build_theta_step(sys, c, r), solver, tol)
        theta_step[r] = res.theta
        rows.append(res)
    holds = all(res.theta <= tol for res in rows)
    return SatisfactionVerdict(holds, theta_base, theta_step, rows, vacuous, len(rows), tol)


def _sample_polytope(A, b, rng):
    P = enumerate_v_rep(A, b)
    if P.is_empty:
        raise ValueError("the assumption admits no successor input")
    w = rng.dirichlet(np.ones(P.vertices.shape[0]))
    x = w @ P.vertices
    if P.rays.shape[0]:
        x = x + rng.exponential(size=P.rays.shape[0]) @ P.rays
    return x


def _has_successor(c: LinearContract, z) -> bool:
    return not solve(LPProblem(np.zeros(c.input_dim), c.assume_next,
                               c.assume_rhs - c.assume_now @ z)).is_infeasible


def simulate_under_assumptions(sys: AffineSystem, c: LinearContract, z0, y0, steps, rng,
                               attempts: int = 100):
    """Run the system for ``steps`` steps on a random input obeying ``c``'s
    assumptions.  Successor inputs are random convex combinations of the
    vertices of the one-step assumption polytope, redrawn (up to ``attempts``
    times) when the draw would leave no admissible input for the step after.
    Returns ``(z, y)`` arrays of shape ``(steps + 1, dim)``."""
    z = [np.asarray(z0, dtype=float)]
    y = [np.asarray(y0, dtype=float)]
    for _ in range(steps):
        A, b = c.assume_next, c.assume_rhs - c.assume_now @ z[-1]
        for _ in range(attempts):
            z_next = _sample_polytope(A, b, rng)
            if _has_successor(c, z_next):
                break
        else:
            raise ValueError("could not draw an input with an admissible successor")
        y.append(sys.step(y[-1], z[-1]))
        z.append(z_next)
    return np.array(z), np.array(y)
