"""
Linear programs and their certificates
======================================

Every check in the package reduces to ``maximize c @ x s.t. A @ x <= b``
with free variables.  This script walks through the three outcomes and the
certificate each one carries, then cross-checks an optimum by enumerating
the vertices of the feasible set.
"""
import numpy as np

from agcontracts.lp import LPProblem, solve
from agcontracts.polyhedra import enumerate_v_rep

# %%
# A small polytope: the unit square cut by x + y <= 1.5
A = np.array([[1, 0], [0, 1], [-1, 0], [0, -1], [1, 1]], dtype=float)
b = np.array([1, 1, 0, 0, 1.5])
out = solve(LPProblem([1.0, 2.0], A, b))
print(out.status, out.value, out.point)

# the same maximum from the vertex list
P = enumerate_v_rep(A, b)
print("vertices:\n", P.vertices)
print("max over vertices:", P.max_linear([1.0, 2.0]))

# %%
# Infeasible: x <= 1 and x >= 2.  The Farkas vector y combines the rows
# into 0 <= negative number.
bad = LPProblem([1.0], [[1.0], [-1.0]], [1.0, -2.0])
out = solve(bad)
y = out.farkas
print(out.status, "y =", y, "A.T y =", bad.constraint_matrix.T @ y, "b.y =", bad.rhs @ y)

# %%
# Unbounded: only x >= 0.  The ray keeps every row satisfied and raises
# the objective.
out = solve(LPProblem([1.0, 1.0], [[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0]))
print(out.status, "ray =", out.ray)

# %%
# A polyhedron with a lineality direction: a horizontal strip.  The line
# shows up as a pair of opposite rays.
strip = enumerate_v_rep([[0.0, 1.0], [0.0, -1.0]], [1.0, 0.0])
print("strip vertices", strip.vertices.tolist(), "rays", strip.rays.tolist())
