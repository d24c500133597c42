"""Command line entry point ``geodetect``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import io
from .divergence import chi2_truncated_mc, tv_lower_bound_cdf_gap
from .harness import load_config, run_experiment, summarize, transition_band
from .oracle import SUITES, run_suite
from .quantile import DEFAULT_MC_SAMPLES, solve_threshold
from .rng import SeedSpec
from .sampling import (
    sample_er,
    sample_gaussian_matrix,
    sample_rgg,
    sample_spiked,
    sample_wishart,
)
from .spectrum import parse_spectrum
from .statistics import run_test


def _cmd_run(args):
    cfg = load_config(args.config)
    result = run_experiment(cfg)
    if cfg.experiment_kind == "chi2_scan":
        for row in result:
            print(json.dumps(row, sort_keys=True))
        return 0
    for row in summarize(result):
        print(json.dumps(row, sort_keys=True))
    if cfg.experiment_kind == "phase_diagram":
        print(json.dumps({"transition_band": transition_band(result)}, sort_keys=True))
    return 0


def _seed(args) -> SeedSpec:
    return SeedSpec(args.seed, args.stream)


def _cmd_gen_graph(args):
    if args.ensemble == "er":
        g = sample_er(args.n, args.p, _seed(args))
    else:
        if args.spectrum is None:
            raise SystemExit("--spectrum is required for rgg")
        s = parse_spectrum(args.spectrum)
        t = args.t
        if t is None:
            t = solve_threshold(s, args.p, args.method, seed=_seed(args).child("threshold")).t
        g = sample_rgg(s, args.n, args.p, t, _seed(args))
    io.write_graph(g, args.out)
    return 0


def _cmd_gen_matrix(args):
    if args.ensemble == "gaussian":
        m = sample_gaussian_matrix(args.n, _seed(args))
    elif args.ensemble == "spiked":
        m = sample_spiked(args.n, args.u, _seed(args))
    else:
        if args.spectrum is None:
            raise SystemExit("--spectrum is required for wishart")
        m = sample_wishart(parse_spectrum(args.spectrum), args.n, _seed(args))
    io.write_matrix(m, args.out)
    return 0


def _cmd_threshold(args):
    s = parse_spectrum(args.spectrum)
    res = solve_threshold(s, args.p, args.method, n_samples=args.samples, tol=args.tol,
                          seed=SeedSpec(args.seed))
    print(res.line())
    return 0


def _cmd_stat(args):
    sample = io.read_sample(args.input)
    name = args.statistic.replace("-", "_")
    print(json.dumps(run_test(sample, name, args.fpr).to_dict()))
    return 0


def _cmd_chi2(args):
    est = chi2_truncated_mc(args.n, args.u, args.a, args.reps, SeedSpec(args.seed))
    print(json.dumps({"chi2": est.chi2, "chi2_stderr": est.chi2_stderr, "tv_upper": est.bound,
                      "tv_stderr": est.stderr, "guarded": est.guarded, "replicates": est.replicates}))
    return 0


def _cmd_tvgap(args):
    est = tv_lower_bound_cdf_gap(io.read_values(args.file0), io.read_values(args.file1))
    print(json.dumps({"tv_lower": est.bound, "dkw95": est.stderr, "replicates": est.replicates}))
    return 0


def _cmd_verify(args):
    reports = run_suite(args.suite, draws=args.draws)
    failed = [r for r in reports if not r.passed]
    if args.json:
        for r in reports:
            print(json.dumps(r.to_dict()))
    else:
        width = max(len(r.check_name) for r in reports)
        for r in reports:
            flag = "PASS" if r.passed else "FAIL"
            print(f"{flag}  {r.check_name:<{width}}  computed={r.computed:.12g}  "
                  f"reference={r.reference:.12g}  tol={r.tolerance:.3g} ({r.mode})")
        print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geodetect", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment from a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    for name, func in (("gen-graph", _cmd_gen_graph), ("gen-matrix", _cmd_gen_matrix)):
        p = sub.add_parser(name)
        if name == "gen-graph":
            p.add_argument("--ensemble", choices=["er", "rgg"], default="rgg")
            p.add_argument("--p", type=float, default=0.5)
            p.add_argument("--t", type=float, default=None, help="threshold; solved if omitted")
            p.add_argument("--method", choices=["auto", "mc", "cf"], default="auto")
        else:
            p.add_argument("--ensemble", choices=["gaussian", "wishart", "spiked"], default="wishart")
            p.add_argument("--u", type=float, default=0.0)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--spectrum")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--stream", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=func)

    p = sub.add_parser("threshold", help="solve for t_{p,alpha}")
    p.add_argument("--spectrum", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--method", choices=["mc", "cf", "auto"], default="mc")
    p.add_argument("--samples", type=int, default=DEFAULT_MC_SAMPLES)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("stat", help="run the detection test on a graph or matrix file")
    p.add_argument("--input", required=True)
    p.add_argument("--statistic", choices=["signed-triangles", "trace-cube"], required=True)
    p.add_argument("--fpr", type=float, default=0.05)
    p.set_defaults(func=_cmd_stat)

    p = sub.add_parser("chi2", help="truncated chi-square of the spiked ensemble")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--reps", type=int, default=40_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_chi2)

    p = sub.add_parser("tvgap", help="cdf-gap TV lower bound between two sample files")
    p.add_argument("--file0", required=True)
    p.add_argument("--file1", required=True)
    p.set_defaults(func=_cmd_tvgap)

    p = sub.add_parser("verify", help="run the oracle suite")
    p.add_argument("--suite", choices=["all", *SUITES], default="all")
    p.add_argument("--json", action="store_true")
    p.add_argument("--draws", type=int, default=1_000_000)
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
