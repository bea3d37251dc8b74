"""
Robustness to Gaussian noise and sparse corruption
==================================================

Same recovery problem as before, now observing Y + noise.  Ten trials per
noise level, averaged.
"""

from lpdict.experiments import preset, run_recovery_table

# Dense Gaussian noise of standard deviation sigma on every entry
gauss = run_recovery_table(preset("table2"))
print("gaussian noise, n=32, theta=0.3, r=10^4, p=3")
for s in gauss.summary:
    print(f"  sigma={s['noise_sigma']:.1f}  mean l4 error {100 * s['mean_l4_error']:.3f}%")

# Sparse corruption: 10% of entries shifted by +/- sigma
sparse = run_recovery_table(preset("table3"))
print("sparse corruption (10% of entries)")
for s in sparse.summary:
    print(f"  sigma={s['noise_sigma']:.1f}  mean l4 error {100 * s['mean_l4_error']:.3f}%")

# Errors grow smoothly with the noise level; nothing breaks down abruptly
