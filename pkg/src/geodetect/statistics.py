"""Signed-triangle and trace-cube statistics and the one-sided z-test."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm

from .sampling import GraphSample, SymMatrixSample

__all__ = [
    "TestReport",
    "signed_triangles",
    "signed_triangles_enumerate",
    "trace_cube",
    "trace_cube_triangles",
    "null_moments",
    "run_test",
    "make_report",
    "STATISTICS",
]

STATISTICS = ("signed_triangles", "trace_cube")


def _edge_counts(g: GraphSample) -> tuple[int, int, int]:
    """(edges, wedges, triangles) as exact integers."""
    a = g.adjacency(np.int64)
    deg = a.sum(axis=1)
    m = int(deg.sum()) // 2
    wedges = int((deg * (deg - 1)).sum()) // 2
    tri = int(((a @ a) * a).sum()) // 6
    return m, wedges, tri


def signed_triangles(g: GraphSample) -> float:
    """``sum_{i<j<k} (G_ij - p)(G_ik - p)(G_jk - p)``.

    With ``B = A - p (J - I)`` the centered adjacency (zero diagonal), every
    term of ``tr(B^3)`` with a repeated index contains a diagonal entry of B
    and vanishes, so ``tr(B^3) = 6 * theta`` with no correction left over.
    Expanding ``tr((A - pK)^3)`` with ``K = J - I`` and using
    ``tr(A^2 K) = 2 * wedges``, ``tr(A K^2) = 2 (n - 2) m`` and
    ``tr(K^3) = n (n - 1) (n - 2)`` gives

        theta = triangles - p * wedges + p^2 (n - 2) m - p^3 C(n, 3).

    The counts are exact integers, so the value is invariant under vertex
    relabeling bit for bit.
    """
    n, p = g.n, g.p
    if n < 3:
        return 0.0
    m, wedges, tri = _edge_counts(g)
    triples = n * (n - 1) * (n - 2) // 6
    return tri - p * wedges + p * p * ((n - 2) * m) - p**3 * triples


def signed_triangles_enumerate(g: GraphSample) -> float:
    """Direct O(n^3) sum over triples; reference for :func:`signed_triangles`."""
    a = g.adjacency(np.int64)
    p = g.p
    total = 0.0
    for i, j, k in itertools.combinations(range(g.n), 3):
        total += (a[i, j] - p) * (a[i, k] - p) * (a[j, k] - p)
    return total


def trace_cube(m: SymMatrixSample) -> float:
    """``tr(M^3)``, computed as ``sum((M @ M) * M)`` for symmetric M."""
    d = m.dense()
    return float(np.sum((d @ d) * d))


def trace_cube_triangles(m: SymMatrixSample) -> float:
    """``6 * sum_{i<j<k} M_ij M_jk M_ik``; equals ``tr(M^3)`` when the diagonal is zero."""
    d = m.dense()
    n = m.n
    if n < 3:
        return 0.0
    idx = np.array(list(itertools.combinations(range(n), 3)))
    i, j, k = idx.T
    return 6.0 * float(np.sum(d[i, j] * d[j, k] * d[i, k]))


def null_moments(statistic_name: str, n: int, p: float | None = None) -> tuple[float, float]:
    """Exact null mean and variance.

    Distinct triples share at most one edge, so their centered products are
    uncorrelated and the variance is the number of triples times the
    per-triple second moment.
    """
    if n < 3:
        raise ValueError("null moments need n >= 3")
    triples = math.comb(n, 3)
    if statistic_name == "signed_triangles":
        if p is None or not 0.0 < p < 1.0:
            raise ValueError("signed_triangles needs p in (0, 1)")
        return 0.0, triples * (p * (1.0 - p)) ** 3
    if statistic_name == "trace_cube":
        return 0.0, 36.0 * triples
    raise ValueError(f"unknown statistic {statistic_name!r}")


@dataclass(frozen=True)
class TestReport:
    __test__ = False  # keep pytest from collecting this

    statistic_name: str
    value: float
    null_mean: float
    null_sd: float
    z_score: float
    threshold_z: float
    reject: bool

    def to_dict(self) -> dict:
        return asdict(self)


def run_test(sample, statistic_name: str, false_positive_rate: float = 0.05) -> TestReport:
    """One-sided Gaussian-calibrated test; rejects for large positive values."""
    if not 0.0 < false_positive_rate < 0.5:
        raise ValueError("false_positive_rate must lie in (0, 0.5)")
    if statistic_name == "signed_triangles":
        if not isinstance(sample, GraphSample):
            raise TypeError("signed_triangles needs a GraphSample")
        value = signed_triangles(sample)
        mean, var = null_moments(statistic_name, sample.n, sample.p)
    elif statistic_name == "trace_cube":
        if not isinstance(sample, SymMatrixSample):
            raise TypeError("trace_cube needs a SymMatrixSample")
        value = trace_cube(sample)
        mean, var = null_moments(statistic_name, sample.n)
    else:
        raise ValueError(f"unknown statistic {statistic_name!r}")
    return make_report(statistic_name, value, mean, var, false_positive_rate)


def make_report(statistic_name: str, value: float, mean: float, variance: float,
                false_positive_rate: float) -> TestReport:
    """z-score against the null moments; reject iff z exceeds the upper fpr quantile."""
    sd = math.sqrt(variance)
    z = (value - mean) / sd
    thr = float(norm.isf(false_positive_rate))
    return TestReport(statistic_name, float(value), mean, sd, z, thr, bool(z > thr))
