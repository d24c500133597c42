"""Experiment orchestration: power curves, phase diagrams and friends.

An experiment is described by an :class:`ExperimentConfig` (readable from a
flat ``key = value`` file).  It expands into points ``(spectrum, n)``; each
point runs ``replicates`` tests under the null and the alternative.  Every
replicate draws from the stream
``SeedSpec(master_seed, stable_hash(point, replicate, hypothesis))`` so any
record can be regenerated on its own and the execution order never matters.

Records are appended to a JSON-lines file; rerunning the same config against
the same file only computes the missing ``(point, hypothesis, replicate)``
keys.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.special import expit

from . import __version__
from .divergence import chi2_truncated_mc, tv_lower_bound_cdf_gap
from .quantile import solve_threshold
from .rng import SeedSpec, stable_hash
from .sampling import sample_er, sample_gaussian_matrix, sample_rgg, sample_wishart
from .spectrum import Spectrum, parse_spectrum, peel_bound_proxy, peel_sequence, split
from .statistics import run_test

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "load_config",
    "parse_config",
    "config_hash",
    "run_experiment",
    "run_power_curve",
    "run_phase_diagram",
    "run_null_calibration",
    "run_wishart_vs_gaussian",
    "run_chi2_scan",
    "run_peel_diagnostics",
    "summarize",
    "transition_band",
    "read_records",
    "replicate_record",
    "MAX_DESK_DIMENSION",
]

log = logging.getLogger(__name__)

KINDS = ("power_curve", "phase_diagram", "null_calibration", "chi2_scan", "wishart_vs_gaussian")
MAX_DESK_DIMENSION = 10_000_000
SKIPPED = "skipped: desk-scale budget"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_kind: str
    spectrum_spec: str = "flat:100"
    n_grid: tuple[int, ...] = (10,)
    p: float = 0.5
    replicates: int = 100
    false_positive_rate: float = 0.05
    master_seed: int = 0
    output_path: str | None = None
    # phase diagrams: spectrum_spec may contain "{gamma}", expanded over this grid
    gamma_grid: tuple[str, ...] = ()
    # chi2 scans: target values of u^3 n^(3/2)
    rate_grid: tuple[float, ...] = (0.02, 0.04, 0.08)
    chi2_replicates: int = 40_000
    threshold_method: str = "auto"
    workers: int | None = None

    def __post_init__(self):
        if self.experiment_kind not in KINDS:
            raise ValueError(f"experiment_kind must be one of {KINDS}, got {self.experiment_kind!r}")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.n_grid:
            raise ValueError("n_grid must be nonempty")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if not 0.0 < self.false_positive_rate < 0.5:
            raise ValueError("false_positive_rate must lie in (0, 0.5)")
        if self.experiment_kind == "phase_diagram" and not self.gamma_grid:
            raise ValueError("phase_diagram needs a nonempty gamma_grid")

    def spectra(self) -> list[str]:
        if "{gamma}" in self.spectrum_spec:
            if not self.gamma_grid:
                raise ValueError("spectrum_spec has a {gamma} placeholder but gamma_grid is empty")
            return [self.spectrum_spec.replace("{gamma}", str(g)) for g in self.gamma_grid]
        return [self.spectrum_spec]


def config_hash(cfg: ExperimentConfig) -> str:
    keep = {k: v for k, v in asdict(cfg).items() if k not in ("output_path", "workers")}
    return f"{stable_hash(json.dumps(keep, sort_keys=True, default=list)):016x}"


_LIST_INT = {"n_grid"}
_LIST_FLOAT = {"rate_grid"}
_LIST_STR = {"gamma_grid"}
_INT = {"replicates", "master_seed", "chi2_replicates", "workers"}
_FLOAT = {"p", "false_positive_rate"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines; lists are comma separated, ``#`` starts a comment."""
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in known:
            raise ValueError(f"config line {lineno}: cannot parse {raw!r}")
        items = [v.strip() for v in val.split(",") if v.strip()]
        if key in _LIST_INT:
            values[key] = tuple(int(float(v)) for v in items)
        elif key in _LIST_FLOAT:
            values[key] = tuple(float(v) for v in items)
        elif key in _LIST_STR:
            values[key] = tuple(items)
        elif key in _INT:
            values[key] = int(float(val))
        elif key in _FLOAT:
            values[key] = float(val)
        else:
            values[key] = val
    if "experiment_kind" not in values:
        raise ValueError("config must set experiment_kind")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@dataclass
class ExperimentRecord:
    config_hash: str
    kind: str
    spectrum: str
    point: int
    n: int
    d_eff: float
    signal: float
    hypothesis: str
    replicate: int
    statistic: float | None
    reject: bool | None
    wall_time_ms: int
    error: str | None = None

    @property
    def key(self):
        return (self.point, self.hypothesis, self.replicate)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class _Point:
    index: int
    spectrum: str
    n: int
    d_eff: float
    threshold: float | None = None
    error: str | None = None

    @property
    def signal(self) -> float:
        return self.n**3 / self.d_eff


@dataclass(frozen=True)
class _Task:
    cfg_hash: str
    kind: str
    master_seed: int
    p: float
    fpr: float
    point: _Point
    hypothesis: str
    replicate: int


@lru_cache(maxsize=32)
def _spectrum(spec: str) -> Spectrum:
    return parse_spectrum(spec)


def _seed_for(master_seed: int, point: int, replicate: int, hypothesis: str) -> SeedSpec:
    return SeedSpec(master_seed, stable_hash(point, replicate, hypothesis))


def _statistic_name(kind: str) -> str:
    return "trace_cube" if kind == "wishart_vs_gaussian" else "signed_triangles"


def _draw(task: _Task):
    pt = task.point
    seed = _seed_for(task.master_seed, pt.index, task.replicate, task.hypothesis)
    if task.kind == "wishart_vs_gaussian":
        if task.hypothesis == "alt":
            return sample_wishart(_spectrum(pt.spectrum), pt.n, seed)
        return sample_gaussian_matrix(pt.n, seed)
    if task.hypothesis == "alt":
        return sample_rgg(_spectrum(pt.spectrum), pt.n, task.p, pt.threshold, seed)
    return sample_er(pt.n, task.p, seed)


def _execute(task: _Task) -> ExperimentRecord:
    pt = task.point
    start = time.perf_counter()
    stat = reject = None
    error = pt.error
    if error is None:
        report = run_test(_draw(task), _statistic_name(task.kind), task.fpr)
        stat, reject = report.value, report.reject
    ms = int(round(1000 * (time.perf_counter() - start)))
    return ExperimentRecord(task.cfg_hash, task.kind, pt.spectrum, pt.index, pt.n, pt.d_eff,
                            pt.signal, task.hypothesis, task.replicate, stat, reject, ms, error)


def replicate_record(cfg: ExperimentConfig, point: int, hypothesis: str, replicate: int) -> ExperimentRecord:
    """Recompute a single record from the config and its key alone."""
    pt = _points(cfg)[point]
    return _execute(_Task(config_hash(cfg), cfg.experiment_kind, cfg.master_seed, cfg.p,
                          cfg.false_positive_rate, pt, hypothesis, replicate))


def _points(cfg: ExperimentConfig) -> list[_Point]:
    points = []
    needs_threshold = cfg.experiment_kind in ("power_curve", "phase_diagram")
    for spec in cfg.spectra():
        s = _spectrum(spec)
        d_eff = s.effective_dimension
        t = err = None
        if s.d > MAX_DESK_DIMENSION:
            err = SKIPPED
        elif needs_threshold:
            try:
                t = solve_threshold(s, cfg.p, cfg.threshold_method,
                                    seed=SeedSpec(cfg.master_seed).child("threshold", spec)).t
            except Exception as exc:  # recorded per point, never fatal
                err = f"threshold solver failed: {exc}"
        for n in cfg.n_grid:
            points.append(_Point(len(points), spec, int(n), d_eff, t, err))
    return points


def _hypotheses(kind: str) -> tuple[str, ...]:
    return ("null",) if kind == "null_calibration" else ("null", "alt")


def read_records(path) -> list[ExperimentRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    for line in path.read_text().splitlines():
        if line.strip():
            out.append(ExperimentRecord(**json.loads(line)))
    return out


def _workers(cfg: ExperimentConfig) -> int:
    if cfg.workers:
        return max(1, cfg.workers)
    env = os.environ.get("GEODETECT_THREADS")
    return max(1, int(env)) if env else (os.cpu_count() or 1)


def _run(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    chash = config_hash(cfg)
    points = _points(cfg)
    existing = {}
    if cfg.output_path:
        for rec in read_records(cfg.output_path):
            if rec.config_hash == chash:
                existing[rec.key] = rec
    tasks = []
    for pt in points:
        for hyp in _hypotheses(cfg.experiment_kind):
            reps = [0] if pt.error == SKIPPED else range(cfg.replicates)
            for r in reps:
                if (pt.index, hyp, r) not in existing:
                    tasks.append(_Task(chash, cfg.experiment_kind, cfg.master_seed, cfg.p,
                                       cfg.false_positive_rate, pt, hyp, r))
    log.info("%s: %d points, %d tasks to run, %d already on disk",
             cfg.experiment_kind, len(points), len(tasks), len(existing))
    workers = _workers(cfg)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            new = list(pool.map(_execute, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        new = [_execute(t) for t in tasks]
    if cfg.output_path:
        _persist(cfg, chash, new)
    records = list(existing.values()) + new
    records.sort(key=lambda r: (r.point, r.hypothesis, r.replicate))
    return records


def _persist(cfg: ExperimentConfig, chash: str, new: list[ExperimentRecord]):
    path = Path(cfg.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a") as fh:
        for rec in new:
            fh.write(rec.to_json() + "\n")
    meta = {"config": asdict(cfg), "config_hash": chash, "version": f"geodetect {__version__}"}
    Path(str(path) + ".meta.json").write_text(json.dumps(meta, indent=2, default=list) + "\n")


def run_power_curve(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Signed-triangle tests of G(n, p, alpha) against G(n, p) over ``n_grid``."""
    return _run(replace(cfg, experiment_kind="power_curve"))


def run_phase_diagram(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Power curves for every member of a spectrum family (``{gamma}`` template)."""
    if not cfg.gamma_grid:
        raise ValueError("phase_diagram needs a nonempty gamma_grid")
    return _run(replace(cfg, experiment_kind="phase_diagram"))


def run_null_calibration(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    return _run(replace(cfg, experiment_kind="null_calibration"))


def run_wishart_vs_gaussian(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Trace-cube tests of W(n, alpha) against M(n); see :func:`summarize` for the cdf gap."""
    return _run(replace(cfg, experiment_kind="wishart_vs_gaussian"))


def run_chi2_scan(cfg: ExperimentConfig) -> list[dict]:
    """Truncated chi-square of M(n, u) for ``u = rate^(1/3) / sqrt(n)`` over the grids."""
    rows = []
    for n in cfg.n_grid:
        for rate in cfg.rate_grid:
            u = rate ** (1 / 3) / math.sqrt(n)
            start = time.perf_counter()
            seed = SeedSpec(cfg.master_seed, stable_hash("chi2", int(n), float(rate)))
            est = chi2_truncated_mc(int(n), u, None, cfg.chi2_replicates, seed)
            rows.append({
                "n": int(n), "rate": float(rate), "u": u, "chi2": est.chi2,
                "chi2_stderr": est.chi2_stderr, "tv_upper": est.bound, "tv_stderr": est.stderr,
                "guarded": est.guarded,
                "wall_time_ms": int(round(1000 * (time.perf_counter() - start))),
            })
    if cfg.output_path:
        path = Path(cfg.output_path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in rows))
    return rows


def run_experiment(cfg: ExperimentConfig):
    dispatch = {
        "power_curve": run_power_curve,
        "phase_diagram": run_phase_diagram,
        "null_calibration": run_null_calibration,
        "wishart_vs_gaussian": run_wishart_vs_gaussian,
        "chi2_scan": run_chi2_scan,
    }
    return dispatch[cfg.experiment_kind](cfg)


def summarize(records: list[ExperimentRecord]) -> list[dict]:
    """Per-point power, false-positive rate, their standard errors and cdf gap.

    Standard errors use the normal approximation to a binomial proportion.
    The result is independent of record order.
    """
    by_point: dict[int, list[ExperimentRecord]] = {}
    for rec in records:
        by_point.setdefault(rec.point, []).append(rec)
    out = []
    for point in sorted(by_point):
        recs = by_point[point]
        first = recs[0]
        row = {"point": point, "spectrum": first.spectrum, "n": first.n, "d_eff": first.d_eff,
               "signal": first.signal, "error": first.error}
        stats = {}
        for hyp in ("null", "alt"):
            good = sorted((r for r in recs if r.hypothesis == hyp and r.error is None),
                          key=lambda r: r.replicate)
            if not good:
                continue
            rate = sum(r.reject for r in good) / len(good)
            se = math.sqrt(rate * (1 - rate) / len(good))
            key = "fpr" if hyp == "null" else "power"
            row[key], row[key + "_se"], row[hyp + "_replicates"] = rate, se, len(good)
            stats[hyp] = np.array([r.statistic for r in good])
        if len(stats) == 2:
            row["cdf_gap"] = tv_lower_bound_cdf_gap(stats["null"], stats["alt"]).bound
        out.append(row)
    return out


def _logistic_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    def nll(beta):
        z = beta[0] + beta[1] * x
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    def grad(beta):
        r = expit(beta[0] + beta[1] * x) - y
        return np.array([r.sum(), (r * x).sum()])

    res = optimize.minimize(nll, np.array([0.0, 1.0]), jac=grad, method="BFGS")
    return float(res.x[0]), float(res.x[1])


def transition_band(records: list[ExperimentRecord]) -> dict[str, dict]:
    """Logistic fit of reject on log(signal) for each spectrum.

    Returns, per spectrum, the fitted intercept/slope and the signal at which
    fitted power crosses 1/2.
    """
    out = {}
    for spec in sorted({r.spectrum for r in records}):
        alt = [r for r in records if r.spectrum == spec and r.hypothesis == "alt" and r.error is None]
        if not alt:
            continue
        x = np.log([r.signal for r in alt])
        y = np.array([float(r.reject) for r in alt])
        b0, b1 = _logistic_fit(x, y)
        crossing = math.exp(-b0 / b1) if b1 > 0 else math.nan
        out[spec] = {"intercept": b0, "slope": b1, "crossing_signal": crossing,
                     "d_eff": alt[0].d_eff, "crossing_n3": crossing * alt[0].d_eff}
    return out


def run_peel_diagnostics(s: Spectrum, n_grid) -> dict:
    """Deterministic table of the peel decomposition against ``n^3``."""
    sp = split(s)
    report = {"d": s.d, "r": sp.r, "degenerate": sp.degenerate,
              "effective_dimension": s.effective_dimension,
              "comparison_dimension": s.comparison_dimension, "rows": []}
    if sp.degenerate:
        report["note"] = "degenerate split: top weight carries more than 2/3 of the squared mass"
        return report
    report["u"] = [step.u_t for step in peel_sequence(sp)]
    for n in n_grid:
        sum_term, l3_term, minus_cmp = peel_bound_proxy(s, n)
        report["rows"].append({
            "n": int(n), "n3": float(n) ** 3, "sum_term": sum_term, "l3_term": l3_term,
            "minus_comparison_dim": minus_cmp,
            "n3_below_d_eff": float(n) ** 3 < s.effective_dimension,
            "n3_below_minus_comparison_dim": float(n) ** 3 < minus_cmp,
        })
    return report
