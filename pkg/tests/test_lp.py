import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from agcontracts.lp import (LPDimensionError, LPProblem, PivotBudgetExceeded, Status,
                            feasibility_tolerance, solve)
from agcontracts.polyhedra import enumerate_v_rep
from lp_battery import battery


def check_certificate(problem, out, tol=1e-7):
    A, b, c = problem.constraint_matrix, problem.rhs, problem.objective
    if out.status is Status.OPTIMAL:
        assert problem.max_violation(out.point) <= feasibility_tolerance(b) * 10
        assert out.value == pytest.approx(c @ out.point, abs=1e-9)
    elif out.status is Status.UNBOUNDED:
        r = out.ray
        scale = 1.0 + np.abs(A).max() if A.size else 1.0
        assert np.all(A @ r <= tol * scale)
        assert c @ r > tol
    else:
        y = out.farkas
        assert np.all(y >= 0)
        assert np.max(np.abs(A.T @ y)) <= tol * (1 + np.abs(y).sum())
        assert b @ y < -tol


# [TRIVIAL] worked examples

def test_single_binding_constraint():
    out = solve(LPProblem([1.0], [[1.0]], [1.0]))
    assert out.status is Status.OPTIMAL
    assert out.value == 1.0
    np.testing.assert_allclose(out.point, [1.0])


def test_contradictory_bounds():
    p = LPProblem([1.0], [[1.0], [-1.0]], [1.0, -2.0])
    out = solve(p)
    assert out.status is Status.INFEASIBLE
    check_certificate(p, out)


def test_unbounded_half_line():
    out = solve(LPProblem([1.0], [[-1.0]], [0.0]))
    assert out.status is Status.UNBOUNDED
    np.testing.assert_allclose(out.ray, [1.0])


def test_no_rows():
    assert solve(LPProblem([0.0, 0.0], np.zeros((0, 2)), [])).value == 0.0
    assert solve(LPProblem([1.0, 0.0], np.zeros((0, 2)), [])).is_unbounded


def test_zero_matrix_negative_rhs_is_infeasible():
    out = solve(LPProblem([1.0], [[0.0]], [-1.0]))
    assert out.is_infeasible
    assert out.extended_value == -np.inf


def test_free_variables_can_be_negative():
    # max -x - y  s.t. x >= -3, y >= -2
    out = solve(LPProblem([-1.0, -1.0], [[-1.0, 0.0], [0.0, -1.0]], [3.0, 2.0]))
    assert out.value == pytest.approx(5.0)
    np.testing.assert_allclose(out.point, [-3.0, -2.0])


def test_equality_via_paired_rows():
    A = [[1.0, 1.0], [-1.0, -1.0], [-1.0, 0.0], [0.0, -1.0]]
    out = solve(LPProblem([1.0, 2.0], A, [4.0, -4.0, 0.0, 0.0]))
    assert out.value == pytest.approx(8.0)


@pytest.mark.parametrize("bad", [
    dict(objective=[1.0, 2.0], constraint_matrix=[[1.0]], rhs=[1.0]),
    dict(objective=[1.0], constraint_matrix=[[1.0]], rhs=[1.0, 2.0]),
    dict(objective=[np.nan], constraint_matrix=[[1.0]], rhs=[1.0]),
    dict(objective=[1.0], constraint_matrix=[[np.inf]], rhs=[1.0]),
    dict(objective=[[1.0]], constraint_matrix=[[1.0]], rhs=[1.0]),
])
def test_construction_errors(bad):
    with pytest.raises(LPDimensionError):
        LPProblem(**bad)


def test_pivot_budget_is_reported():
    rng = np.random.default_rng(3)
    A = rng.normal(size=(12, 6))
    p = LPProblem(rng.normal(size=6), A, np.abs(rng.normal(size=12)) + 1)
    with pytest.raises(PivotBudgetExceeded) as err:
        solve(p, pivot_budget=1)
    assert err.value.budget == 1
    assert "1 pivots" in str(err.value)


def test_bland_only_matches_dantzig():
    rng = np.random.default_rng(11)
    for _ in range(30):
        A = rng.normal(size=(8, 4))
        p = LPProblem(rng.normal(size=4), A, rng.uniform(0, 2, size=8))
        a, b = solve(p), solve(p, dantzig_budget=0)
        assert a.status is b.status
        if a.is_optimal:
            assert a.value == pytest.approx(b.value, abs=1e-8)


def test_degenerate_cycling_example():
    # Beale's classic cycling instance for Dantzig's rule, written with x >= 0 rows
    A = np.array([[0.25, -60, -1 / 25, 9], [0.5, -90, -1 / 50, 3], [0, 0, 1, 0]])
    A = np.vstack([A, -np.eye(4)])
    b = np.array([0, 0, 1, 0, 0, 0, 0])
    c = np.array([0.75, -150, 1 / 50, -6])
    out = solve(LPProblem(c, A, b))
    assert out.is_optimal
    assert out.value == pytest.approx(0.05)


# [DERIVED] battery with statuses fixed by construction; optima checked by enumeration

BATTERY = battery()


@pytest.mark.parametrize("k", range(len(BATTERY)))
def test_battery_status(k):
    problem, expected = BATTERY[k]
    out = solve(problem)
    assert out.status is expected
    check_certificate(problem, out)
    if expected is Status.OPTIMAL:
        V = enumerate_v_rep(problem.constraint_matrix, problem.rhs)
        assert out.value == pytest.approx(V.max_linear(problem.objective), abs=1e-8)


def test_battery_composition():
    statuses = [s for _, s in BATTERY]
    assert len(BATTERY) == 50
    assert {s: statuses.count(s) for s in Status} == {
        Status.OPTIMAL: 20, Status.INFEASIBLE: 15, Status.UNBOUNDED: 15}


def dual_value(problem):
    """min b.y  s.t.  A^T y = c, y >= 0, solved as a maximization."""
    A, b, c = problem.constraint_matrix, problem.rhs, problem.objective
    m = A.shape[0]
    D = np.vstack([A.T, -A.T, -np.eye(m)])
    rhs = np.concatenate([c, -c, np.zeros(m)])
    return -solve(LPProblem(-b, D, rhs)).value


def test_strong_duality_random():
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        n, m = rng.integers(1, 5), rng.integers(1, 8)
        A = rng.normal(size=(m, n))
        b = rng.uniform(-1, 3, size=m)
        c = rng.normal(size=n)
        p = LPProblem(c, np.vstack([A, np.eye(n), -np.eye(n)]),
                      np.concatenate([b, 4 * np.ones(2 * n)]))
        out = solve(p)
        if not out.is_optimal:
            continue
        assert out.value == pytest.approx(dual_value(p), abs=1e-8 * (1 + abs(out.value)))
        checked += 1


def test_agrees_with_highs_on_random_bounded():
    linprog = pytest.importorskip("scipy.optimize").linprog
    rng = np.random.default_rng(1)
    for _ in range(200):
        n, m = rng.integers(1, 6), rng.integers(1, 10)
        A = rng.normal(size=(m, n))
        b = rng.normal(size=m)
        c = rng.normal(size=n)
        out = solve(LPProblem(c, A, b))
        ref = linprog(-c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
        if ref.status == 0:
            assert out.is_optimal
            assert out.value == pytest.approx(-ref.fun, abs=1e-7 * (1 + abs(ref.fun)))
        elif ref.status == 2:
            assert out.is_infeasible
        elif ref.status == 3:
            assert out.is_unbounded


small = st.integers(1, 4).flatmap(lambda n: st.integers(1, 6).flatmap(lambda m: st.tuples(
    arrays(float, (m, n), elements=st.integers(-3, 3).map(float)),
    arrays(float, (m,), elements=st.integers(-3, 3).map(float)),
    arrays(float, (n,), elements=st.integers(-3, 3).map(float)),
)))


@given(small)
def test_certificates_always_verify(data):
    A, b, c = data
    p = LPProblem(c, A, b)
    check_certificate(p, solve(p))


@given(small)
def test_status_matches_enumeration(data):
    A, b, c = data
    p = LPProblem(c, A, b)
    out = solve(p)
    sup = enumerate_v_rep(A, b).max_linear(c)
    if out.is_optimal:
        assert out.value == pytest.approx(sup, abs=1e-8)
    else:
        assert out.extended_value == sup


@given(small, st.floats(0.25, 4))
def test_positive_objective_scaling(data, s):
    A, b, c = data
    a, b2 = solve(LPProblem(c, A, b)), solve(LPProblem(s * c, A, b))
    assert a.status is b2.status
    if a.is_optimal:
        assert b2.value == pytest.approx(s * a.value, abs=1e-8 * (1 + abs(s * a.value)))
