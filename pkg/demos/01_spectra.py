"""
Spectra and their dimensions
============================

A spectrum is the diagonal of the latent covariance.  Two dimension measures
summarize it; for a flat spectrum both equal d, for a decaying spectrum they
separate.
"""

import numpy as np

from geodetect import Spectrum, parse_spectrum, peel_sequence, split

# flat spectra: every notion of dimension agrees
flat = parse_spectrum("flat:4096")
print("flat:4096          d_eff =", flat.effective_dimension, " comparison =", flat.comparison_dimension)

# alpha_i = i^(-1/3): the effective dimension stays of order d, the comparison
# dimension drops to order d^(2/3)
for d in (512, 4096, 32768):
    s = parse_spectrum(f"power:{d}:1/3")
    print(f"power:{d}:1/3  d_eff/d = {s.effective_dimension / d:.3f}   "
          f"comparison/d^(2/3) = {s.comparison_dimension / d ** (2 / 3):.3f}")

# the large/small split and the peel sequence that adds large weights back
sp = split(Spectrum(np.ones(6)))
print("\nsplit of 1^6: r =", sp.r, " alpha+ =", sp.alpha_plus.weights, " alpha- =", sp.alpha_minus.weights)
for step in peel_sequence(sp):
    print(f"  t={step.t}  u_t={step.u_t:.4f}  (1/sqrt({1 / step.u_t ** 2:.0f}))")

# a dominant atom makes the split degenerate
print("\nsplit of (10, 1) degenerate:", split(Spectrum([10, 1])).degenerate)
