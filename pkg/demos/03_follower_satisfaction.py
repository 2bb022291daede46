"""
Checking the closed-loop follower against C2
============================================

The controller is affine in the measurements and the follower state, so the
closed loop is ``y+ = F y + B z + f``.  Satisfaction is proved by induction:
a base LP over the initial set and a step LP that assumes the guarantee now
and checks it one step later.
"""
import numpy as np

from agcontracts.casestudy import (CaseStudyParams, build_contract_C2, build_follower_system,
                                   follower_accel)
from agcontracts.satisfaction import check_satisfaction, simulate_under_assumptions

p = CaseStudyParams()
system, init = build_follower_system(p)
c2 = build_contract_C2(p)
print("F =\n", system.state_matrix)
print("B =\n", system.input_matrix)
print("f =", system.offset)

# the folded matrices reproduce the control law
y, z = np.array([10.0, 25.0]), np.array([70.0, 24.0])
print("folded v_f+ :", system.step(y, z)[1], " literal:", y[1] + p.dt * follower_accel(p, *z, *y))

# %%
v = check_satisfaction(system, c2, init)
print("holds:", v.holds, " theta_base:", v.theta_base, " theta_step:", v.theta_step)

# %%
# The controller margin lam enters the successor headway one-for-one.
import warnings

for shift in (-0.2, -0.1, 0.0, 0.1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        q = p.with_overrides(lam=p.lam + shift)
    sys_q, init_q = build_follower_system(q)
    vq = check_satisfaction(sys_q, c2, init_q)
    print(f"lam = {q.lam:.2f}  theta_step = {vq.theta_step[0]:+.3f}  holds = {vq.holds}")

# %%
# A random run that respects C2's assumptions never loses the margin.
rng = np.random.default_rng(0)
z, y = simulate_under_assumptions(system, c2, [60.0, 20.0], [0.0, 20.0], 500, rng)
margin = z[:, 0] - y[:, 0] - p.h * y[:, 1] - p.delta_p
print("smallest margin over 500 steps:", margin.min())
