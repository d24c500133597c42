"""Brute-force and quadrature checks of the closed forms used elsewhere.

Nothing in here reuses the formula code it checks: X and Y are summed pair
by pair, the per-entry Gaussian integral is done by Gauss-Hermite quadrature
without completing the square, and null moments come from enumerating every
graph in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy.special import roots_hermite

from . import divergence, statistics
from .rng import NormalStream, SeedSpec

__all__ = [
    "OracleReport",
    "GH_NODES",
    "entry_integral_closed_form",
    "quadrature_entry_integral",
    "check_entry_integral",
    "enumerate_signed_triangles_null",
    "mc_moment_suite",
    "truncation_tail_curve",
    "run_suite",
    "SUITES",
]

GH_NODES = 200
SUITES = ("lemma-inner", "triangles", "moments", "tails")


@dataclass(frozen=True)
class OracleReport:
    check_name: str
    computed: float
    reference: float
    tolerance: float
    passed: bool
    mode: str = "abs"

    @classmethod
    def compare(cls, name, computed, reference, tolerance, mode="abs"):
        computed, reference = float(computed), float(reference)
        diff = abs(computed - reference)
        if mode == "rel":
            diff = diff / abs(reference) if reference != 0 else diff
        return cls(name, computed, reference, float(tolerance), bool(diff <= tolerance), mode)

    def to_dict(self) -> dict:
        return asdict(self)


_gh_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gh(nodes: int):
    if nodes not in _gh_cache:
        x, w = roots_hermite(nodes)
        with np.errstate(divide="ignore"):  # far-tail weights underflow to 0
            logw = np.log(w)
        _gh_cache[nodes] = (math.sqrt(2.0) * x, logw - 0.5 * math.log(math.pi))
    return _gh_cache[nodes]


def entry_integral_closed_form(gi_gj: float, hi_hj: float, u: float) -> float:
    """``sqrt((1-u^2)/(1+u^2)) * exp(u^2 xy/(1-u^4) - u^4 (x^2+y^2)/(2(1-u^4)))``."""
    c = 1.0 - u**4
    expo = u * u * gi_gj * hi_hj / c - u**4 * (gi_gj**2 + hi_hj**2) / (2.0 * c)
    return math.sqrt((1.0 - u * u) / (1.0 + u * u)) * math.exp(expo)


def quadrature_entry_integral(gi_gj: float, hi_hj: float, u: float, nodes: int = GH_NODES) -> float:
    """``E_{A~N(0,1)} exp(-(A-u x)^2/(2(1-u^2)) - (A-u y)^2/(2(1-u^2)) + A^2)`` by Gauss-Hermite."""
    if not 0.0 <= u <= 0.9:
        raise ValueError("quadrature is only certified for u in [0, 0.9]")
    a, logw = _gh(nodes)
    s = 1.0 - u * u
    expo = -((a - u * gi_gj) ** 2) / (2 * s) - ((a - u * hi_hj) ** 2) / (2 * s) + a * a
    terms = logw + expo
    top = terms.max()
    return float(math.exp(top) * np.exp(terms - top).sum())


def check_entry_integral(gi_gj, hi_hj, u, tol=1e-8) -> OracleReport:
    name = f"lemma-inner entry x={gi_gj:g} y={hi_hj:g} u={u:g}"
    return OracleReport.compare(name, quadrature_entry_integral(gi_gj, hi_hj, u),
                                entry_integral_closed_form(gi_gj, hi_hj, u), tol, "rel")


def _pair_interaction_by_quadrature(g, h, u) -> float:
    """Full pair interaction as a product of per-entry quadratures."""
    total = 1.0
    for i, j in itertools.combinations(range(len(g)), 2):
        total *= quadrature_entry_integral(g[i] * g[j], h[i] * h[j], u) / (1.0 - u * u)
    return total


def enumerate_signed_triangles_null(n: int, p) -> tuple[Fraction, Fraction]:
    """Exact mean and variance of signed triangles under G(n, p), over all graphs."""
    if n > 5:
        raise ValueError("enumeration is limited to n <= 5")
    p = Fraction(p)
    pairs = list(itertools.combinations(range(n), 2))
    index = {pair: k for k, pair in enumerate(pairs)}
    triples = [(index[(i, j)], index[(i, k)], index[(j, k)])
               for i, j, k in itertools.combinations(range(n), 3)]
    mean = Fraction(0)
    second = Fraction(0)
    for bits in itertools.product((0, 1), repeat=len(pairs)):
        edges = sum(bits)
        weight = p**edges * (1 - p) ** (len(pairs) - edges)
        theta = Fraction(0)
        for a, b, c in triples:
            theta += (bits[a] - p) * (bits[b] - p) * (bits[c] - p)
        mean += weight * theta
        second += weight * theta * theta
    return mean, second - mean * mean


def _xy_direct(G: np.ndarray, H: np.ndarray):
    """X and Y summed explicitly over pairs, row-wise."""
    n = G.shape[1]
    X = np.zeros(G.shape[0])
    Yg = np.zeros(G.shape[0])
    Yh = np.zeros(G.shape[0])
    for i, j in itertools.combinations(range(n), 2):
        X += G[:, i] * G[:, j] * H[:, i] * H[:, j]
        Yg += G[:, i] ** 2 * G[:, j] ** 2
        Yh += H[:, i] ** 2 * H[:, j] ** 2
    return X, 0.5 * (Yg + Yh)


def _truncated_rows(stream: NormalStream, n: int, a: float, count: int) -> np.ndarray:
    rows = []
    have = 0
    while have < count:
        z = stream.take((max(1024, count - have), n))
        ok = (np.sum(z**2, axis=1) <= (1 + a) * n) & (np.sum(z**4, axis=1) <= 3 * (1 + a) * n)
        rows.append(z[ok])
        have += int(ok.sum())
    return np.concatenate(rows)[:count]


def _mean_se(v: np.ndarray):
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(v.size))


def mc_moment_suite(n: int, draws: int, seed: SeedSpec, a: float = 1.0,
                    chunk: int = 100_000) -> list[OracleReport]:
    """Moment identities of X and Y under plain and truncated Gaussians.

    Plain: ``E X^2 = E Y = n(n-1)/2`` (2% relative) and
    ``E X^3 = n(n-1)(n-2)`` (5% relative; absolute 5% of ``n^3`` when the
    reference is zero).  Truncated at ``S(a)``: ``E X`` and ``E XY`` within
    four standard errors of zero.
    """
    if draws < 100_000:
        raise ValueError("draws must be at least 1e5")
    plain = NormalStream(seed.child("plain"))
    trunc = NormalStream(seed.child("truncated"))
    acc = {k: [] for k in ("X2", "Y", "X3", "tX", "tXY")}
    for start in range(0, draws, chunk):
        m = min(chunk, draws - start)
        G = plain.take((m, n))
        H = plain.take((m, n))
        X, Y = _xy_direct(G, H)
        acc["X2"].append(X**2)
        acc["Y"].append(Y)
        acc["X3"].append(X**3)
        G = _truncated_rows(trunc, n, a, m)
        H = _truncated_rows(trunc, n, a, m)
        X, Y = _xy_direct(G, H)
        acc["tX"].append(X)
        acc["tXY"].append(X * Y)
    v = {k: np.concatenate(x) for k, x in acc.items()}
    half = n * (n - 1) / 2
    cubic = n * (n - 1) * (n - 2)
    reports = [
        OracleReport.compare(f"moments E[X^2] n={n}", v["X2"].mean(), half, 0.02, "rel"),
        OracleReport.compare(f"moments E[Y] n={n}", v["Y"].mean(), half, 0.02, "rel"),
    ]
    if cubic:
        reports.append(OracleReport.compare(f"moments E[X^3] n={n}", v["X3"].mean(), cubic, 0.05, "rel"))
    else:
        reports.append(OracleReport.compare(f"moments E[X^3] n={n}", v["X3"].mean(), 0.0,
                                            0.05 * max(n, 1) ** 3, "abs"))
    for key, label in (("tX", "E[X]"), ("tXY", "E[XY]")):
        mean, se = _mean_se(v[key])
        reports.append(OracleReport.compare(f"moments truncated {label} n={n} a={a:g}", mean, 0.0, 4 * se))
    return reports


def truncation_tail_curve(n_list, a_list, draws: int, seed: SeedSpec) -> list[dict]:
    """Empirical ``P(g not in S(a))`` on a grid.

    The same draws are reused across ``a`` for a given ``n``; since the sets
    are nested the curve is then exactly nonincreasing in ``a``.
    """
    if draws < 100_000:
        raise ValueError("draws must be at least 1e5")
    rows = []
    for n in n_list:
        stream = NormalStream(seed.child("tails", int(n)))
        l2 = np.empty(draws)
        l4 = np.empty(draws)
        chunk = max(1, (1 << 22) // n)
        for start in range(0, draws, chunk):
            z = stream.take((min(chunk, draws - start), n))
            z2 = z * z
            l2[start:start + z.shape[0]] = z2.sum(axis=1)
            l4[start:start + z.shape[0]] = (z2 * z2).sum(axis=1)
        for a in sorted(a_list):
            out = (l2 > (1 + a) * n) | (l4 > 3 * (1 + a) * n)
            k = int(out.sum())
            rows.append({"n": int(n), "a": float(a), "exceed": k / draws, "count": k, "draws": draws})
    return rows


def _suite_lemma_inner() -> list[OracleReport]:
    reports = []
    grid = np.linspace(-2.0, 2.0, 5)
    for u in (0.1, 0.2, 0.3):
        for x in grid:
            for y in grid:
                reports.append(check_entry_integral(float(x), float(y), u, 1e-8))
    g, h, u = (1.0, -0.5, 2.0), (0.3, 1.0, -1.0), 0.2
    reports.append(OracleReport.compare(
        "lemma-inner full pair interaction n=3", divergence.pair_interaction(g, h, u),
        _pair_interaction_by_quadrature(g, h, u), 1e-8, "rel"))
    # node doubling: the 200-node rule has converged
    reports.append(OracleReport.compare(
        "lemma-inner node doubling x=2 y=-2 u=0.9", quadrature_entry_integral(2.0, -2.0, 0.9),
        quadrature_entry_integral(2.0, -2.0, 0.9, nodes=2 * GH_NODES), 1e-10, "rel"))
    return reports


def _suite_triangles() -> list[OracleReport]:
    reports = []
    for n in (3, 4, 5):
        for p in (Fraction(1, 4), Fraction(1, 2)):
            mean, var = enumerate_signed_triangles_null(n, p)
            closed = math.comb(n, 3) * (p * (1 - p)) ** 3
            reports.append(OracleReport(f"triangles exact variance n={n} p={p}", float(var),
                                        float(closed), 0.0, var == closed))
            reports.append(OracleReport(f"triangles exact mean n={n} p={p}", float(mean), 0.0, 0.0, mean == 0))
            _, fvar = statistics.null_moments("signed_triangles", n, float(p))
            reports.append(OracleReport.compare(f"triangles null_moments n={n} p={p}", fvar,
                                                float(var), 1e-15, "rel"))
    return reports


def _suite_moments(draws: int, seed: SeedSpec) -> list[OracleReport]:
    return mc_moment_suite(10, draws, seed.child("moments"))


def _suite_tails(draws: int, seed: SeedSpec) -> list[OracleReport]:
    rows = truncation_tail_curve([20, 50], [1.0, 2.0, 4.0, 10.0], draws, seed.child("tails"))
    reports = []
    for n in (20, 50):
        probs = [r["exceed"] for r in rows if r["n"] == n]
        worst = max((b - a for a, b in zip(probs, probs[1:])), default=0.0)
        reports.append(OracleReport(f"tails nonincreasing in a n={n}", worst, 0.0, 0.0, worst <= 0.0))
    far = next(r for r in rows if r["n"] == 50 and r["a"] == 10.0)
    reports.append(OracleReport(f"tails a=10 n=50 below resolution ({draws} draws)",
                                far["exceed"], 0.0, 0.0, far["count"] == 0))
    return reports


def run_suite(suite: str = "all", draws: int = 1_000_000, seed: SeedSpec = SeedSpec(20220101)) -> list[OracleReport]:
    """Run one named suite (or ``all``) and return every report."""
    names = SUITES if suite == "all" else (suite,)
    reports = []
    for name in names:
        if name == "lemma-inner":
            reports += _suite_lemma_inner()
        elif name == "triangles":
            reports += _suite_triangles()
        elif name == "moments":
            reports += _suite_moments(draws, seed)
        elif name == "tails":
            reports += _suite_tails(draws, seed)
        else:
            raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)} or all")
    return reports
