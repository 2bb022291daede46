import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from agcontracts.casestudy import CaseStudyParams, build_contract_C2, build_follower_system
from agcontracts.contracts import LinearContract
from agcontracts.lp import Status
from agcontracts.satisfaction import (AffineSystem, InitSet, build_theta_base, build_theta_step,
                                      check_satisfaction, current_slice_rows,
                                      simulate_under_assumptions)


def case_study(p=None):
    p = p or CaseStudyParams()
    system, init = build_follower_system(p)
    return system, build_contract_C2(p), init


def test_case_study_holds():
    v = check_satisfaction(*case_study())
    assert v.holds
    assert v.theta_base[0] == pytest.approx(0, abs=1e-9)
    assert v.theta_step[0] == pytest.approx(0, abs=1e-9)
    assert v.lp_count == 2
    assert v.vacuous_base_rows == []


@pytest.mark.parametrize("shift, expected", [(0.1, -0.1), (-0.1, 0.1), (0.37, -0.37)])
def test_lambda_shift(shift, expected):
    # [DERIVED] lam enters the successor headway affinely with coefficient one
    p = CaseStudyParams()
    with pytest.warns(UserWarning):
        q = p.with_overrides(lam=p.lam + shift)
    v = check_satisfaction(*case_study(q))
    assert v.theta_step[0] == pytest.approx(expected, abs=1e-9)
    assert v.holds == (expected <= 0)


@given(st.floats(0, 0.3), st.floats(0, 1), st.floats(0.5, 3), st.floats(0.5, 4))
def test_step_theta_closed_form(tau, delta_p, xi_down, h):
    # [DERIVED] substituting the control law gives p_f+ + h v_f+ = p_m + (dt - tau) v_m - lam,
    # so the successor margin is p_m+ - p_m - (dt - tau) v_m + lam - delta_p, and the
    # measurement assumption bounds the first three terms below by -xi_down
    p = CaseStudyParams(tau=tau, delta_p=delta_p, xi_down=xi_down, h=h)
    v = check_satisfaction(*case_study(p))
    assert v.theta_step[0] == pytest.approx(p.xi_down + p.delta_p - p.lam, abs=1e-7)
    assert v.holds


def test_base_objective_is_negated_slack():
    system, c, init = case_study()
    lp = build_theta_base(system, c, init, 0)
    np.testing.assert_array_equal(lp.problem.objective, c.guar_now[0])
    assert lp.offset == -c.guar_rhs[0]


def test_empty_init_is_vacuous():
    system, c, _ = case_study()
    init = InitSet([[0, 0, 0, 0]], [-1.0])
    v = check_satisfaction(system, c, init)
    assert v.theta_base[0] == -np.inf
    assert v.rows[0].status is Status.INFEASIBLE


def test_zero_guarantee_contract():
    system, _, init = case_study()
    c = LinearContract(2, 2, np.zeros((0, 2)), np.zeros((0, 2)), [],
                       np.zeros((0, 4)), np.zeros((0, 4)), [])
    calls = []
    v = check_satisfaction(system, c, init, solver=lambda p: calls.append(p))
    assert v.holds and v.lp_count == 0 and calls == []


def test_two_slice_row_is_vacuous_at_base():
    system, c, init = case_study()
    c = c.replace(guar_next=[[0, 0, 1, 0]], guar_now=[[0, 0, -1, -0.3]], guar_rhs=[0.0])
    assert build_theta_base(system, c, init, 0) is None
    assert current_slice_rows(c).size == 0
    v = check_satisfaction(system, c, init)
    assert v.vacuous_base_rows == [0]
    assert v.lp_count == 1
    # p_f+ - p_f - dt v_f <= 0 holds with equality under the dynamics
    assert v.theta_step[0] == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("eps", [0.0, 0.1, 1.0, 10.0])
def test_drift_system_fails(eps):
    # [DERIVED] with F = I and B = 0 the follower ignores the measurements.
    # The two position rows of the measurement assumption force
    # v_m >= -(xi_up + xi_down) / (2 tau), and the worst successor margin is
    #   xi_down + (dt - tau) (xi_up + xi_down) / (2 tau) + h eps
    p = CaseStudyParams()
    _, c, init = case_study(p)
    system = AffineSystem(np.eye(2), np.zeros((2, 2)), [0.0, eps])
    v = check_satisfaction(system, c, init)
    expected = p.xi_down + (p.dt - p.tau) * (p.xi_up + p.xi_down) / (2 * p.tau) + p.h * eps
    assert v.theta_step[0] == pytest.approx(expected, abs=1e-9)
    assert not v.holds


def test_step_equality_encoding_has_no_slack():
    system, c, _ = case_study()
    lp = build_theta_step(system, c.replace(guar_rhs=[-5.0]), 0)
    from agcontracts.lp import solve
    out = solve(lp.problem)
    assert out.is_optimal
    w = lp.layout.unpack(out.point)
    resid = w["y1"] - system.step(w["y0"], w["z0"])
    assert np.max(np.abs(resid)) <= 1e-9


def test_dimension_mismatch():
    system, c, init = case_study()
    with pytest.raises(ValueError, match="contract is"):
        check_satisfaction(AffineSystem([[1.0]], [[1.0]], [0.0]), c, init)
    with pytest.raises(IndexError):
        build_theta_step(system, c, 1)


def test_witness_on_failure():
    p = CaseStudyParams()
    with pytest.warns(UserWarning):
        q = p.with_overrides(lam=p.lam - 0.1)
    system, c, init = case_study(q)
    v = check_satisfaction(system, c, init)
    lp = build_theta_step(system, c, 0)
    x = v.witnesses[("step", 0)]
    assert lp.problem.max_violation(x) <= 1e-9
    assert lp.problem.objective @ x + lp.offset == pytest.approx(0.1, abs=1e-9)


def test_simulation_soundness_case_study():
    # whenever the check passes, long random runs keep the guarantee
    system, c, init = case_study()
    rng = np.random.default_rng(5)
    for _ in range(3):
        z0 = np.array([100.0, 20.0])
        y0 = np.array([0.0, 20.0])
        assert c.guar_now[0] @ np.r_[z0, y0] <= c.guar_rhs[0]
        z, y = simulate_under_assumptions(system, c, z0, y0, 1000, rng)
        margin = (np.hstack([z, y]) @ c.guar_now[0]) - c.guar_rhs[0]
        assert np.max(margin) <= 1e-6


@settings(max_examples=15)
@given(st.integers(0, 2 ** 32 - 1))
def test_simulation_soundness_random(seed):
    rng = np.random.default_rng(seed)
    # random scalar system with an interval contract
    a = rng.uniform(-0.9, 0.9)
    b = rng.uniform(-1, 1)
    f = rng.uniform(-1, 1)
    bound = rng.uniform(0.5, 5)
    system = AffineSystem([[a]], [[b]], [f])
    # assumption: |z| <= 1 at both samples; guarantee: |y| <= bound
    c = LinearContract(1, 1, [[1.0], [-1.0], [0.0], [0.0]], [[0.0], [0.0], [1.0], [-1.0]],
                       [1.0, 1.0, 1.0, 1.0],
                       np.zeros((2, 2)), [[0.0, 1.0], [0.0, -1.0]], [bound, bound])
    init = InitSet([[0.0, 1.0], [0.0, -1.0], [1.0, 0.0], [-1.0, 0.0]], [bound, bound, 1, 1])
    v = check_satisfaction(system, c, init)
    # [DERIVED] the interval is invariant iff |a| bound + |b| + |f| <= bound
    worst = abs(a) * bound + abs(b) + abs(f)
    assert v.theta_step[0] == pytest.approx(worst - bound, abs=1e-9) or \
        v.theta_step[1] == pytest.approx(worst - bound, abs=1e-9)
    assert v.holds == (worst - bound <= v.tolerance)
    if v.holds:
        z, y = simulate_under_assumptions(system, c, [rng.uniform(-1, 1)],
                                          [rng.uniform(-bound, bound)], 1000, rng)
        assert np.max(np.abs(y)) <= bound + 1e-6


def test_init_set_validation():
    with pytest.raises(ValueError):
        InitSet([[1.0, 0.0]], [1.0, 2.0])
    assert InitSet(np.zeros((0, 4)), []).matrix.shape == (0, 4)


def test_affine_system_validation():
    with pytest.raises(ValueError, match="state_matrix"):
        AffineSystem([[1.0, 0.0]], [[1.0]], [0.0])
    with pytest.raises(ValueError, match="non-finite"):
        AffineSystem([[np.inf]], [[1.0]], [0.0])
