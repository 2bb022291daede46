"""Dense linear programming in maximize form with free variables.

Every problem handled here has the shape::

    maximize    c @ x
    subject to  A @ x <= b,   x free

which is the form all implication and satisfaction checks reduce to.  The
solver is a two-phase tableau simplex.  Pivoting follows Dantzig's rule for a
bounded number of iterations and then switches to Bland's rule, which cannot
cycle.  A hard pivot budget guards against numerical trouble.

Outcomes carry certificates: an optimal point, an unbounded ray ``r`` with
``A @ r <= 0`` and ``c @ r > 0``, or a Farkas vector ``y >= 0`` with
``A.T @ y == 0`` and ``b @ y < 0`` for infeasible problems.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FEAS_TOL",
    "VALUE_TOL",
    "LPDimensionError",
    "LPOutcome",
    "LPProblem",
    "PivotBudgetExceeded",
    "Status",
    "feasibility_tolerance",
    "solve",
]

FEAS_TOL = 1e-9
VALUE_TOL = 1e-8
_PIVOT_TOL = 1e-11
_COST_TOL = 1e-10


class LPDimensionError(ValueError):
    """Raised when an LP is assembled from inconsistent or non-finite data."""


class PivotBudgetExceeded(RuntimeError):
    """Raised when the simplex method does not terminate within its budget."""

    def __init__(self, budget):
        super().__init__(f"simplex exceeded its pivot budget of {budget} pivots")
        self.budget = budget


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LPProblem:
    """``maximize objective @ x  s.t.  constraint_matrix @ x <= rhs``."""

    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = _frozen(self.objective)
        b = _frozen(self.rhs)
        A = np.array(self.constraint_matrix, dtype=float)
        if c.ndim != 1:
            raise LPDimensionError(f"objective must be a vector, got shape {c.shape}")
        if b.ndim != 1:
            raise LPDimensionError(f"rhs must be a vector, got shape {b.shape}")
        if A.size == 0:
            A = A.reshape(b.shape[0], c.shape[0])
        if A.ndim != 2:
            raise LPDimensionError(f"constraint_matrix must be 2-D, got shape {A.shape}")
        if A.shape[1] != c.shape[0]:
            raise LPDimensionError(
                f"objective has length {c.shape[0]} but constraint_matrix has {A.shape[1]} columns"
            )
        if A.shape[0] != b.shape[0]:
            raise LPDimensionError(
                f"rhs has length {b.shape[0]} but constraint_matrix has {A.shape[0]} rows"
            )
        for name, arr in (("objective", c), ("constraint_matrix", A), ("rhs", b)):
            if not np.all(np.isfinite(arr)):
                raise LPDimensionError(f"{name} contains non-finite entries")
        A.setflags(write=False)
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    @property
    def n_rows(self) -> int:
        return self.rhs.shape[0]

    def max_violation(self, x) -> float:
        """Largest amount by which ``x`` violates a constraint (0 if feasible)."""
        if self.n_rows == 0:
            return 0.0
        return float(max(0.0, np.max(self.constraint_matrix @ np.asarray(x, float) - self.rhs)))


def feasibility_tolerance(rhs) -> float:
    """Absolute feasibility tolerance scaled by the size of the right-hand side."""
    rhs = np.asarray(rhs, dtype=float)
    scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
    return FEAS_TOL * (1.0 + scale)


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LPOutcome:
    status: Status
    value: float | None = None
    point: np.ndarray | None = None
    ray: np.ndarray | None = None
    farkas: np.ndarray | None = None
    pivots: int = field(default=0, compare=False)

    @property
    def is_optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def is_infeasible(self) -> bool:
        return self.status is Status.INFEASIBLE

    @property
    def is_unbounded(self) -> bool:
        return self.status is Status.UNBOUNDED

    @property
    def extended_value(self) -> float:
        """Optimal value, ``-inf`` when infeasible and ``+inf`` when unbounded."""
        if self.status is Status.OPTIMAL:
            return float(self.value)
        return -np.inf if self.status is Status.INFEASIBLE else np.inf


class _Tableau:
    """Dense simplex tableau over ``T[:, :-1] @ v == T[:, -1], v >= 0``."""

    def __init__(self, T, basis, dantzig_budget, hard_budget):
        self.T = T
        self.basis = basis
        self.pivots = 0
        self.dantzig_budget = dantzig_budget
        self.hard_budget = hard_budget

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T[:, :-1]

    def pivot(self, row, col):
        T = self.T
        T[row] /= T[row, col]
        others = np.abs(T[:, col]) > 0
        others[row] = False
        T[others] -= np.outer(T[others, col], T[row])
        T[row, col] = 1.0
        T[others, col] = 0.0
        self.basis[row] = col
        self.pivots += 1

    def run(self, cost, allowed):
        """Pivot to optimality for ``maximize cost @ v``.

        Returns ``None`` at optimality or the entering column index when the
        objective is unbounded along that column.
        """
        while True:
            if self.pivots >= self.hard_budget:
                raise PivotBudgetExceeded(self.hard_budget)
            d = self.reduced_costs(cost)
            d[~allowed] = 0.0
            d[self.basis] = 0.0
            candidates = np.flatnonzero(d > _COST_TOL)
            if candidates.size == 0:
                return None
            bland = self.pivots >= self.dantzig_budget
            col = int(candidates[0]) if bland else int(candidates[np.argmax(d[candidates])])
            column = self.T[:, col]
            rows = np.flatnonzero(column > _PIVOT_TOL)
            if rows.size == 0:
                return col
            ratios = self.T[rows, -1] / column[rows]
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            if bland:
                row = int(tied[np.argmin(np.asarray(self.basis)[tied])])
            else:
                row = int(tied[np.argmax(column[tied])])
            self.pivot(row, col)


def _trivial(problem):
    c = problem.objective
    n = problem.n_vars
    if problem.n_rows == 0 or not np.any(problem.constraint_matrix):
        # rows reduce to 0 <= b
        if problem.n_rows and np.min(problem.rhs) < -feasibility_tolerance(problem.rhs):
            y = np.zeros(problem.n_rows)
            y[int(np.argmin(problem.rhs))] = 1.0
            return LPOutcome(Status.INFEASIBLE, farkas=y)
        if np.any(c):
            ray = c / np.max(np.abs(c))
            return LPOutcome(Status.UNBOUNDED, ray=ray)
        return LPOutcome(Status.OPTIMAL, value=0.0, point=np.zeros(n))
    return None


def solve(problem: LPProblem, dantzig_budget: int | None = None,
          pivot_budget: int | None = None) -> LPOutcome:
    """Solve ``problem`` and classify it as optimal, infeasible or unbounded.

    Free variables are split internally into positive and negative parts;
    callers only ever see points and rays in the original coordinates.
    """
    shortcut = _trivial(problem)
    if shortcut is not None:
        return shortcut

    A, b, c = problem.constraint_matrix, problem.rhs, problem.objective
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    flipped = np.flatnonzero(sign < 0)
    n_art = flipped.size
    N = 2 * n + m + n_art

    # standard form columns: x+ (n) | x- (n) | slack (m) | artificial (n_art)
    std = np.zeros((m, N))
    std[:, :n] = A * sign[:, None]
    std[:, n:2 * n] = -std[:, :n]
    std[:, 2 * n:2 * n + m] = np.diag(sign)
    std[flipped, 2 * n + m + np.arange(n_art)] = 1.0
    b_std = b * sign

    basis = [2 * n + i for i in range(m)]
    for k, i in enumerate(flipped):
        basis[i] = 2 * n + m + k

    size = m + N
    tab = _Tableau(
        np.column_stack([std, b_std]),
        basis,
        dantzig_budget if dantzig_budget is not None else 10 * size,
        pivot_budget if pivot_budget is not None else 50 * size + 1000,
    )

    art_cols = np.arange(2 * n + m, N)
    real = np.ones(N, dtype=bool)
    real[art_cols] = False

    if n_art:
        phase1 = np.zeros(N)
        phase1[art_cols] = -1.0
        tab.run(phase1, np.ones(N, dtype=bool))
        infeasibility = -float(phase1[tab.basis] @ tab.T[:, -1])
        if infeasibility > feasibility_tolerance(b):
            B = std[:, tab.basis]
            pi = np.linalg.lstsq(B.T, phase1[tab.basis], rcond=None)[0]
            y = np.maximum(sign * pi, 0.0)
            return LPOutcome(Status.INFEASIBLE, farkas=y, pivots=tab.pivots)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if tab.basis[i] in art_cols:
                row = tab.T[i, :-1].copy()
                row[~real] = 0.0
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > 1e-9:
                    tab.pivot(i, j)
                else:
                    keep[i] = False
        if not keep.all():
            tab.T = tab.T[keep]
            tab.basis = [bi for bi, k in zip(tab.basis, keep) if k]
            std = std[keep]
            b_std = b_std[keep]

    cost = np.zeros(N)
    cost[:n] = c
    cost[n:2 * n] = -c
    col = tab.run(cost, real)

    if col is not None:
        direction = np.zeros(N)
        direction[col] = 1.0
        direction[tab.basis] = -tab.T[:, col]
        ray = direction[:n] - direction[n:2 * n]
        ray = ray / np.max(np.abs(ray))
        return LPOutcome(Status.UNBOUNDED, ray=ray, pivots=tab.pivots)

    # recompute the basic solution from the original data for accuracy
    v = np.zeros(N)
    B = std[:, tab.basis]
    try:
        v[tab.basis] = np.linalg.solve(B, b_std)
    except np.linalg.LinAlgError:
        v[tab.basis] = tab.T[:, -1]
    x = v[:n] - v[n:2 * n]
    if problem.max_violation(x) > feasibility_tolerance(b):
        # fall back on the tableau values if refinement made things worse
        v[:] = 0.0
        v[tab.basis] = tab.T[:, -1]
        x = v[:n] - v[n:2 * n]
    return LPOutcome(Status.OPTIMAL, value=float(c @ x), point=x, pivots=tab.pivots)
