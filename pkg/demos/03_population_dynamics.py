"""
Population dynamics on the sphere
=================================

With infinitely many samples the GPM step becomes a <- g/||g|| where
g = E[||a_Omega||^(p-2) a_Omega].  For p = 4 the expectation has a closed
form, so the iteration can be followed exactly.
"""

import math

import numpy as np

from lpdict import ExpectationEngine
from lpdict.experiments import population_dynamics

engine = ExpectationEngine("closed-form-p4")
run = population_dynamics(50, 0.1, 4, engine, seed=0)

print(f"target coordinate {run.target}, tau(a0) = {run.tau0:.4f}")
print(f"steps needed before SOR > 1 (bound): {math.ceil(run.t_tau_bound)}")
print(f"steps taken: {run.iterations_to_sor_gt_1}")

# Two stages: SOR grows geometrically, then the error contracts by about theta per step
for row in run.rows[:12]:
    print(f"  t={row['iteration']:2d}  error={row['sphere_error']:.3e}  SOR={row['sor']:.3f}"
          f"  ratio={row['error_ratio']:.3f}")
print(f"tail contraction ratio {run.tail_ratio:.4f} (theta = 0.1)")

# The contraction factor tracks theta
for theta in (0.05, 0.1, 0.2, 0.3):
    print(f"theta={theta}: tail ratio {population_dynamics(50, theta, 4, engine, seed=1).tail_ratio:.4f}")

# Over many random starts the measured first stage never exceeds the bound
steps = [population_dynamics(50, 0.1, 4, engine, seed=s) for s in range(50)]
slack = [math.ceil(r.t_tau_bound) - r.iterations_to_sor_gt_1 for r in steps]
print("bound minus steps over 50 starts: min", min(slack), "max", max(slack), "mean", np.mean(slack))
