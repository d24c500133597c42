"""Acceptance criteria, each run at its stated size and tolerance.

Every test prints a single ``criterion <k>: PASS|FAIL ...`` line, repeated in
the terminal summary.  These runs are long (about half an hour on one core);
select them with ``pytest -m acceptance``.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from geodetect.harness import (
    ExperimentConfig,
    run_chi2_scan,
    run_null_calibration,
    run_phase_diagram,
    run_power_curve,
    run_wishart_vs_gaussian,
    summarize,
    transition_band,
)
from geodetect.oracle import run_suite
from geodetect.quantile import solve_threshold_cf
from geodetect.rng import SeedSpec
from geodetect.sampling import GraphSample, sample_rgg, sample_wishart, threshold_graph
from geodetect.spectrum import Spectrum, parse_spectrum
from geodetect.statistics import signed_triangles, signed_triangles_enumerate

from .conftest import ACCEPTANCE_LINES

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


def _report(k, ok, detail, seconds, limit):
    within = seconds <= limit
    status = "PASS" if ok and within else "FAIL"
    line = f"criterion {k}: {status}  {detail}  [{seconds:.1f}s, limit {limit:.0f}s]"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return ok and within


def _cfg(kind, **kw):
    return ExperimentConfig(experiment_kind=kind, workers=1, **kw)


def test_criterion_1_oracle_suite():
    start = time.perf_counter()
    reports = run_suite("all", draws=1_000_000)
    elapsed = time.perf_counter() - start
    failed = [r.check_name for r in reports if not r.passed]
    detail = f"{len(reports) - len(failed)}/{len(reports)} oracle checks passed"
    if failed:
        detail += f"; failed: {', '.join(failed[:5])}"
    assert _report(1, not failed, detail, elapsed, 300)


def test_criterion_2_null_calibration():
    start = time.perf_counter()
    cfg = _cfg("null_calibration", n_grid=(30,), p=0.5, replicates=10_000, master_seed=2)
    recs = run_null_calibration(cfg)
    elapsed = time.perf_counter() - start
    fpr = float(np.mean([r.reject for r in recs]))
    var = float(np.var([r.statistic for r in recs], ddof=1))
    target = math.comb(30, 3) * 0.25**3
    rel = abs(var / target - 1)
    ok = 0.03 <= fpr <= 0.07 and rel <= 0.05
    detail = f"FPR={fpr:.4f} in [0.03, 0.07]; null variance {var:.2f} vs {target:.2f} (rel {rel:.3%} <= 5%)"
    assert _report(2, ok, detail, elapsed, 120)


def test_criterion_3_power_above_threshold():
    start = time.perf_counter()
    cfg = _cfg("power_curve", spectrum_spec="flat:32", n_grid=(32,), p=0.5, replicates=1000, master_seed=3)
    row = summarize(run_power_curve(cfg))[0]
    elapsed = time.perf_counter() - start
    ok = row["power"] >= 0.99
    assert _report(3, ok, f"power={row['power']:.4f} >= 0.99 (signal n^3/d_eff={row['signal']:.0f})", elapsed, 300)


def test_criterion_4_indistinguishable_below_threshold():
    # sample_rgg forms the Gram matrix blockwise and thresholds it: the matrix channel
    start = time.perf_counter()
    cfg = _cfg("power_curve", spectrum_spec="flat:2000000", n_grid=(8,), p=0.5, replicates=1000,
               master_seed=4)
    row = summarize(run_power_curve(cfg))[0]
    elapsed = time.perf_counter() - start
    ok = 0.02 <= row["power"] <= 0.10 and row["cdf_gap"] < 0.1
    detail = (f"rejection rate={row['power']:.4f} in [0.02, 0.10]; cdf gap={row['cdf_gap']:.4f} < 0.1 "
              f"(signal={row['signal']:.2e})")
    assert _report(4, ok, detail, elapsed, 1200)


def test_criterion_5_effective_dimension_collapse():
    start = time.perf_counter()
    n_grid = tuple(int(round(x)) for x in np.geomspace(17, 130, 12))
    cfg = _cfg("phase_diagram", spectrum_spec="power:4096:{gamma}", gamma_grid=("0", "1/3"),
               n_grid=n_grid, p=0.5, replicates=400, master_seed=5)
    recs = run_phase_diagram(cfg)
    band = transition_band(recs)
    elapsed = time.perf_counter() - start
    flat, power = band["power:4096:0"], band["power:4096:1/3"]
    collapse = max(flat["crossing_signal"], power["crossing_signal"]) / min(
        flat["crossing_signal"], power["crossing_signal"])
    # the flat family (where every dimension notion equals d) calibrates the constant in
    # n^3 ~ c * dimension; the power family's crossing then implies a dimension to compare
    implied = power["crossing_n3"] / flat["crossing_signal"]
    cmp_dim = parse_spectrum("power:4096:1/3").comparison_dimension
    # d_eff / comparison_dimension is only about 1.97 at d = 4096, so an implied dimension
    # that tracks d_eff cannot clear a factor of 8; this half is expected to fail
    separation = implied / cmp_dim
    ok_collapse = collapse <= 4
    ok_separation = separation > 8
    detail = (f"crossing signals flat={flat['crossing_signal']:.2f} power={power['crossing_signal']:.2f} "
              f"(ratio {collapse:.2f} <= 4: {'yes' if ok_collapse else 'no'}); implied dimension "
              f"{implied:.0f} vs comparison_dimension {cmp_dim:.0f} and d_eff {power['d_eff']:.0f} "
              f"(ratio {separation:.2f} > 8: {'yes' if ok_separation else 'no'})")
    assert _report(5, ok_collapse and ok_separation, detail, elapsed, 3600)


def test_criterion_6_spiked_rate():
    start = time.perf_counter()
    cfg = _cfg("chi2_scan", n_grid=(8, 16, 32), rate_grid=(0.02, 0.04, 0.08), chi2_replicates=40_000,
               master_seed=6)
    with pytest.warns(Warning):  # the larger rates exceed the u^2 n guard and are flagged
        rows = run_chi2_scan(cfg)
    elapsed = time.perf_counter() - start
    slopes = {}
    for n in (8, 16, 32):
        sub = [r for r in rows if r["n"] == n]
        x = np.log([r["rate"] for r in sub])
        y = np.log([r["chi2"] for r in sub])
        slopes[n] = float(np.polyfit(x, y, 1)[0])
    ok = all(abs(s - 2.0) <= 0.5 for s in slopes.values())
    # rate = u^3 n^(3/2), so slope 2 in the rate is slope 6 in u at fixed n
    detail = "slopes of log chi2 vs log(u^3 n^1.5): " + ", ".join(
        f"n={n}: {s:.3f} (= {3 * s:.2f} in log u)" for n, s in slopes.items()) + "; target 2.0 +- 0.5"
    assert _report(6, ok, detail, elapsed, 600)


def test_criterion_7_wishart_direction():
    start = time.perf_counter()
    strong = summarize(run_wishart_vs_gaussian(
        _cfg("wishart_vs_gaussian", spectrum_spec="flat:16", n_grid=(16,), replicates=1000, master_seed=7)))[0]
    weak = summarize(run_wishart_vs_gaussian(
        _cfg("wishart_vs_gaussian", spectrum_spec="flat:5120", n_grid=(8,), replicates=4000, master_seed=8)))[0]
    elapsed = time.perf_counter() - start
    # at fpr 0.05 the trace-cube power at (16, 16) is about 0.989 (20000 replicates), just
    # under 0.99; the check is kept at the stated level and may fail
    ok = strong["power"] >= 0.99 and weak["cdf_gap"] < 0.1
    detail = (f"power at (n,d)=(16,16): {strong['power']:.4f} >= 0.99; cdf gap at (8,5120): "
              f"{weak['cdf_gap']:.4f} < 0.1 ({weak['alt_replicates']} replicates per side)")
    assert _report(7, ok, detail, elapsed, 600)


def _exact_theta(g):
    p = Fraction(g.p)
    a = g.adjacency()
    total = Fraction(0)
    for i in range(g.n):
        for j in range(i + 1, g.n):
            for k in range(j + 1, g.n):
                total += (a[i, j] - p) * (a[i, k] - p) * (a[j, k] - p)
    return total


def test_criterion_8_exactness_and_coupling():
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    coupled = 0
    for case in range(100):
        s = Spectrum(rng.exponential(size=int(rng.integers(1, 200))) ** rng.uniform(0.5, 2))
        n = int(rng.integers(2, 40))
        p = float(rng.uniform(0.02, 0.98))
        t = solve_threshold_cf(s, p).t
        seed = SeedSpec(8, case)
        coupled += threshold_graph(sample_wishart(s, n, seed), t / s.l2, p) == sample_rgg(s, n, p, t, seed)
    exact = 0
    for _ in range(100):
        n = int(rng.integers(3, 9))
        # p on a 1/64 grid keeps every product exactly representable, so "exact" means bitwise
        p = int(rng.integers(1, 64)) / 64
        g = GraphSample.from_mask(n, p, rng.random(n * (n - 1) // 2) < rng.uniform(0.1, 0.9))
        theta = signed_triangles(g)
        exact += theta == signed_triangles_enumerate(g) and Fraction(theta) == _exact_theta(g)
    elapsed = time.perf_counter() - start
    ok = coupled == 100 and exact == 100
    detail = f"coupling identical on {coupled}/100 cases; signed triangles exact on {exact}/100 graphs"
    assert _report(8, ok, detail, elapsed, 60)
