"""
Sample complexity grows with p
==============================

Success probability (l4 error below 1%) against the number of samples for
n = 30, theta = 0.3 and p = 3..6.  Takes about two minutes.
"""

from lpdict.experiments import min_samples_for_success, preset, run_phase_transition

phase = run_phase_transition(preset("phase"))
samples = sorted({c["samples"] for c in phase})

print("success probability, 20 trials per cell")
print("   r  " + "".join(f"{r:>7d}" for r in samples))
for p in (3, 4, 5, 6):
    probs = {c["samples"]: c["success_prob"] for c in phase if c["p"] == p}
    print(f"p={p}  " + "".join(f"{probs[r]:7.2f}" for r in samples))

# The transition moves right as p grows
print("fewest samples with >= 90% success:", min_samples_for_success(phase))
