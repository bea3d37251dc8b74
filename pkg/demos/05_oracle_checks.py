"""
Checking the fast code against brute force
==========================================

The oracle module evaluates expectations by enumerating supports one at a
time, aligns by trying every signed permutation, and estimates moments by
plain Monte Carlo.  None of it shares code with the library routines.
"""

import numpy as np

from lpdict import ExpectationEngine, align, gamma_p, random_stiefel
from lpdict.expectation import population_direction
from lpdict.oracle import (
    SampleSpec,
    SupportExpectationQuery,
    abs_projection_power,
    exact_support_expectation,
    exhaustive_alignment,
    mc_moment,
)

rng = np.random.default_rng(0)

# Hungarian alignment vs all 2^5 * 5! signed permutations
A, D0 = np.array(random_stiefel(5, 5, rng)), np.array(random_stiefel(5, 5, rng))
print("align:", align(A, D0).frob_error, " exhaustive:", exhaustive_alignment(A, D0))

# Vectorized population direction vs support-by-support enumeration
a = rng.standard_normal(8)
a /= np.linalg.norm(a)
fast = population_direction(a, 5, 0.3, ExpectationEngine())
slow = exact_support_expectation(SupportExpectationQuery(a, "norm-power-coordinate", 0.3, 3))
print("population direction max difference:", np.abs(fast - slow).max())

# The population objective at a basis vector is gamma_p * theta
for p in (3, 4, 5, 6):
    mean, se = mc_moment(SampleSpec(6, theta=0.2), abs_projection_power(np.eye(6)[0], p), 500_000, seed=p)
    print(f"p={p}: Monte Carlo {mean:.4f} +/- {se:.4f}, gamma_p*theta = {0.2 * gamma_p(p):.4f}")

# With Gaussian noise a 1-sparse direction still beats a 2-sparse one
spec = SampleSpec(4, theta=0.3, eta=0.5)
f1 = abs_projection_power(np.eye(4)[3], 4)
f2 = abs_projection_power(np.array([0, 0, 1, 1]) / np.sqrt(2), 4)
gap, se = mc_moment(spec, lambda Y: f1(Y) - f2(Y), 500_000, seed=7)
print(f"noisy gap {gap:.4f} +/- {se:.4f}")
