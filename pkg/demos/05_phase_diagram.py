"""
Collapse across spectrum families
=================================

Plotted against n^3 / d_eff, the power curves of a flat and a power-law
spectrum line up.  A logistic fit per family locates the 50% crossing.
"""

import numpy as np

from geodetect import parse_spectrum
from geodetect.harness import ExperimentConfig, run_phase_diagram, summarize, transition_band

cfg = ExperimentConfig(
    experiment_kind="phase_diagram",
    spectrum_spec="power:1024:{gamma}",
    gamma_grid=("0", "1/3"),
    n_grid=tuple(int(x) for x in np.geomspace(8, 64, 8).round()),
    replicates=150,
    master_seed=5,
)
records = run_phase_diagram(cfg)
for row in summarize(records):
    print(f"{row['spectrum']:16s} n={row['n']:>3d} signal={row['signal']:8.2f} power={row['power']:.3f}")

print()
for spec, fit in transition_band(records).items():
    s = parse_spectrum(spec)
    print(f"{spec:16s} crossing signal {fit['crossing_signal']:.1f}  n^3 at crossing {fit['crossing_n3']:.0f}  "
          f"d_eff {s.effective_dimension:.0f}  comparison_dimension {s.comparison_dimension:.0f}")
