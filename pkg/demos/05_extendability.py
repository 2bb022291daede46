"""
Extendability of stacked constraint triples
===========================================

A triple ``(V1, V0, v0)`` is extendable when every pair ``(u0, u1)`` with
``V1 u1 + V0 u0 <= v0`` can be continued by some ``u2``.  Refinement is
exact (not just sound) when the three stacked triples built from the
cascade are extendable.  The check enumerates the pair polyhedron, so it
only runs in small dimensions.
"""
import numpy as np

from agcontracts.casestudy import CaseStudyParams, build_triple
from agcontracts.refinement import check_extendability, theorem_triples

# u1 <= 1 with u0 free: always continue with u2 = 0
print(check_extendability([[1.0]], [[0.0]], [1.0]))

# u1 >= u0 + 1 and u1 <= 0: the pair (-1, 0) is stuck
print(check_extendability([[-1.0], [1.0]], [[1.0], [0.0]], [-1.0, 0.0]))

# %%
# In the case study, the leader constraint v_l >= 0 only applies to the
# current sample.  A pair that brakes from v_l = 0 to v_l = -2.94 satisfies
# the rows but cannot be continued.
t = build_triple(CaseStudyParams())
for i, (V1, V0, v0) in enumerate(theorem_triples(t), 1):
    v = check_extendability(V1, V0, v0)
    print(f"triple {i}: extendable={v.extendable} method={v.method} dim={v.dimension}")
    if v.counterexample is not None:
        print("   u0 =", np.round(v.counterexample[0], 3), " u1 =", np.round(v.counterexample[1], 3))
