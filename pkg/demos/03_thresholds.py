"""
Solving for the edge threshold
==============================

t_{p,alpha} is the upper p-quantile of sum_i alpha_i Z_i Z'_i.  Characteristic
function inversion is precise and cheap when the spectrum has few distinct
weights; Monte Carlo works for anything.
"""

import numpy as np
from scipy import stats

from geodetect import SeedSpec, parse_spectrum, solve_threshold_cf, solve_threshold_mc

for spec in ("flat:1", "flat:100", "power:100:1", "geometric:50:0.9"):
    s = parse_spectrum(spec)
    cf = solve_threshold_cf(s, 0.1)
    mc = solve_threshold_mc(s, 0.1, 400_000, SeedSpec(3))
    print(f"{spec:18s} cf: {cf.line()}")
    print(f"{'':18s} mc: {mc.line()}")
    print(f"{'':18s} |t_mc - t_cf| = {abs(mc.t - cf.t):.2e} vs 3*(errors) = {3 * (mc.t_error + cf.t_error):.2e}")

# as the dimension grows the standardized threshold approaches the Gaussian quantile
print("\nGaussian quantile:", round(stats.norm.isf(0.1), 5))
for d in (1, 10, 100, 10_000, 1_000_000):
    s = parse_spectrum(f"flat:{d}")
    print(f"d={d:>8d}  t/|alpha|_2 = {solve_threshold_cf(s, 0.1).t / s.l2:.5f}")

# flat spectra with millions of coordinates are a single distinct weight for inversion
big = parse_spectrum("flat:2000000")
print("\nflat:2e6 median threshold:", solve_threshold_cf(big, 0.5).t)
print("distinct weights:", np.unique(big.weights).size)
