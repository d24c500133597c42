"""
Signed triangles: null calibration and power
============================================

Under G(n, p) the signed-triangle count has mean 0 and variance
C(n,3) (p(1-p))^3.  Geometry inflates it; the test rejects for large z.
Power is governed by n^3 against the effective dimension.
"""

from geodetect.harness import ExperimentConfig, run_power_curve, summarize

cfg = ExperimentConfig(
    experiment_kind="power_curve",
    spectrum_spec="flat:512",
    n_grid=(4, 8, 12, 16, 24, 32, 48),
    p=0.5,
    replicates=200,
    master_seed=11,
)
print(f"{'n':>4s} {'signal':>9s} {'power':>7s} {'fpr':>7s} {'cdf gap':>8s}")
for row in summarize(run_power_curve(cfg)):
    print(f"{row['n']:>4d} {row['signal']:>9.3f} {row['power']:>7.3f} {row['fpr']:>7.3f} {row['cdf_gap']:>8.3f}")
