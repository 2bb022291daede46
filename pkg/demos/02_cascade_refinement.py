"""
Does perception + control refine the headway spec?
==================================================

The follower vehicle is split into a perception contract ``C1`` (noisy,
delayed measurements of the leader) and a dynamics contract ``C2`` (keeps a
robust headway on the measurements).  Their cascade should refine the
top-level contract ``C``: keep ``p_l - p_f - h v_f >= 0`` whenever the leader
obeys its acceleration bounds.
"""
import numpy as np

from agcontracts.casestudy import CaseStudyParams, build_triple
from agcontracts.contracts import CascadeTriple
from agcontracts.refinement import HorizonConfig, check_refinement, suggest_horizons

p = CaseStudyParams()
t = build_triple(p)
print(t.c1.label, "|", t.c2.label, "|", t.c.label)

# %%
# C1 only constrains the measurement one step after it is taken, so the
# implications need a two-step window.  The heuristic spots this.
h = suggest_horizons(t)
print(h)

v = check_refinement(t, h)
print("holds:", v.holds, " LPs solved:", v.lp_count)
print("theta_D      ", v.theta_D)
print("theta_otimes ", np.round(v.theta_otimes, 12))
print("theta_Omega  ", v.theta_Omega)

# %%
# With a single-step window the measurement at k = 0 is unconstrained and
# the LPs are unbounded; the verdict fails and carries a ray.
v1 = check_refinement(t, HorizonConfig(1, 1))
print("one-step window holds:", v1.holds, " unbounded rows:", v1.unbounded_rows)

# %%
# The two velocity rows of C2's assumption are exactly tight, so any extra
# velocity noise breaks refinement by twice the increase.
for dv in (0.1, 0.12, 0.15):
    vv = check_refinement(build_triple(p.with_overrides(delta_v=dv)), h)
    print(f"delta_v = {dv:.2f}  rho_otimes = {vv.rho_otimes:+.3f}  holds = {vv.holds}")

# %%
# Tightening the top-level spec by eps shows up one-for-one in rho_Omega,
# and the failing row comes with a witness trajectory.
c = t.c.replace(guar_rhs=[-0.01])
bad = check_refinement(CascadeTriple(t.c1, t.c2, c), h)
row = next(r for r in bad.rows if r.family == "Omega")
print("rho_Omega", bad.rho_Omega)
for name, val in row.layout.unpack(row.witness).items():
    print(f"  {name}: {np.round(val, 4)}")
