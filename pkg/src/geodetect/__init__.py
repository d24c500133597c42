"""Detecting latent geometry in random graphs and Wishart-type matrices.

Simulation of anisotropic random geometric graphs and Wishart matrices,
signed-triangle and trace-cube detection tests, divergence estimates for the
spiked Gaussian matrix, and an experiment harness for power curves.
"""

__version__ = "0.1.0"

from .rng import SeedSpec  # noqa: E402
from .spectrum import (  # noqa: E402
    Spectrum,
    comparison_dimension,
    effective_dimension,
    parse_spectrum,
    peel_bound_proxy,
    peel_sequence,
    split,
)
from .sampling import (  # noqa: E402
    GraphSample,
    SymMatrixSample,
    rank_one_deleted,
    sample_er,
    sample_gaussian_matrix,
    sample_latent,
    sample_rgg,
    sample_spiked,
    sample_wishart,
    threshold_graph,
)
from .quantile import solve_threshold, solve_threshold_cf, solve_threshold_mc  # noqa: E402
from .statistics import null_moments, run_test, signed_triangles, trace_cube  # noqa: E402

__all__ = [
    "SeedSpec",
    "Spectrum",
    "comparison_dimension",
    "effective_dimension",
    "parse_spectrum",
    "peel_bound_proxy",
    "peel_sequence",
    "split",
    "GraphSample",
    "SymMatrixSample",
    "rank_one_deleted",
    "sample_er",
    "sample_gaussian_matrix",
    "sample_latent",
    "sample_rgg",
    "sample_spiked",
    "sample_wishart",
    "threshold_graph",
    "solve_threshold",
    "solve_threshold_cf",
    "solve_threshold_mc",
    "null_moments",
    "run_test",
    "signed_triangles",
    "trace_cube",
]
