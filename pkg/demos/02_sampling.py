"""
Sampling the five ensembles
===========================

Every sampler is a pure function of its parameters and a SeedSpec, so any
sample can be regenerated from its key.  The geometric graph is the
thresholded Wishart matrix, edge for edge.
"""

import numpy as np
from scipy import stats

from geodetect import (
    SeedSpec,
    parse_spectrum,
    sample_er,
    sample_gaussian_matrix,
    sample_rgg,
    sample_spiked,
    sample_wishart,
    solve_threshold,
    threshold_graph,
)

seed = SeedSpec(master_seed=2024, stream_id=7)
s = parse_spectrum("power:200:0.5")
p = 0.3

# the threshold is solved once and passed in
t = solve_threshold(s, p).t
g = sample_rgg(s, 40, p, t, seed)
print(f"G(40, {p}, alpha): {g.edge_count} edges (expected about {p * 780:.0f})")

# coupling: threshold the Wishart matrix drawn from the same latents
w = sample_wishart(s, 40, seed)
print("thresholded Wishart == RGG:", threshold_graph(w, t / s.l2, p) == g)

# null graph and null matrix
print("G(40, p) edges:", sample_er(40, p, seed).edge_count)
m = sample_gaussian_matrix(40, seed)
print("M(40) entry mean/var:", round(m.entries.mean(), 3), round(m.entries.var(), 3))

# the spiked ensemble interpolates between M(n) (u = 0) and a rank-one matrix (u = 1)
print("spiked u=0 is bitwise M(n) on the noise stream:",
      sample_spiked(40, 0.0, seed) == sample_gaussian_matrix(40, seed.child("noise")))

# high-dimensional Wishart entries look Gaussian
flat = parse_spectrum("flat:20000")
entries = np.concatenate([sample_wishart(flat, 10, SeedSpec(1, r)).entries for r in range(200)])
print("KS distance of W entries to N(0,1) at d=20000:", round(stats.kstest(entries, "norm").statistic, 4))
