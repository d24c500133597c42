"""Edge threshold ``t_{p,alpha}`` with ``P(<X_1, X_2> >= t) = p``.

``<X_1, X_2> = sum_i alpha_i Z_i Z'_i`` for independent standard normals.
Two solvers are provided:

``solve_threshold_mc``
    Empirical quantile of simulated inner products.  Works for any ``d``.
``solve_threshold_cf``
    Gil-Pelaez inversion of ``phi(s) = prod_i (1 + alpha_i^2 s^2)^(-1/2)``
    followed by bisection.  High precision, meant as an oracle for moderate
    numbers of distinct weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import chdtri

from .rng import SeedSpec, normals, uniforms
from .spectrum import Spectrum

__all__ = [
    "QuantileResult",
    "CFConvergenceError",
    "inner_product_draws",
    "solve_threshold_mc",
    "solve_threshold_cf",
    "tail_probability_cf",
    "solve_threshold",
]

DEFAULT_MC_SAMPLES = 2_000_000
DEFAULT_CF_CAP = 100_000
# groups of equal weights at least this large are drawn as a difference of
# chi-squares instead of coordinate by coordinate
_CHI2_GROUP_MIN = 16
_BLOCK_ELEMENTS = 1 << 22


class CFConvergenceError(RuntimeError):
    """The oscillatory inversion integral did not reach the requested accuracy."""


@dataclass(frozen=True)
class QuantileResult:
    """Solved threshold.

    ``error`` bounds ``|achieved_p - p|`` on the probability scale (one
    standard error for Monte Carlo, the quadrature error bound for
    inversion); ``t_error`` is the corresponding uncertainty in ``t``.
    """

    t: float
    achieved_p: float
    method: str
    error: float
    t_error: float
    samples_or_nodes: int
    p_target: float

    def line(self) -> str:
        return f"t={self.t!r} achieved_p={self.achieved_p!r} err={self.t_error!r} method={self.method}"


def _check_p(p):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")


def inner_product_draws(s: Spectrum, count: int, seed: SeedSpec) -> np.ndarray:
    """``count`` iid draws of ``sum_i alpha_i Z_i Z'_i``.

    Equal weights are pooled: a block of ``m`` equal weights ``w`` contributes
    ``w * (A - B) / 2`` with ``A, B ~ chi2_m`` independent, since
    ``Z Z' = ((Z + Z')^2 - (Z - Z')^2) / 4``.  This is an exact
    reparametrization that makes flat spectra cost O(1) per draw.
    """
    vals, counts = s.unique_weights()
    pooled = counts >= _CHI2_GROUP_MIN
    single = np.repeat(vals[~pooled], counts[~pooled])
    out = np.zeros(count)
    if single.size:
        rows = max(1, _BLOCK_ELEMENTS // (2 * single.size))
        for k, start in enumerate(range(0, count, rows)):
            stop = min(start + rows, count)
            z = normals(seed.child("direct", k), (2, stop - start, single.size))
            out[start:stop] += (z[0] * z[1]) @ single
    for idx in np.flatnonzero(pooled):
        w, m = vals[idx], int(counts[idx])
        u = uniforms(seed.child("pooled", idx), (2, count))
        a = chdtri(m, u[0])
        b = chdtri(m, u[1])
        out += 0.5 * w * (a - b)
    return out


def solve_threshold_mc(s: Spectrum, p: float, n_samples: int = DEFAULT_MC_SAMPLES,
                       seed: SeedSpec = SeedSpec(0)) -> QuantileResult:
    """Empirical ``(1 - p)`` quantile of simulated inner products.

    The threshold is the order statistic of rank ``ceil((1 - p) N)``.  Its
    standard error is ``sqrt(p (1 - p) / N) / f`` with the density ``f``
    estimated by a central difference across the +-0.5% quantile window.
    """
    _check_p(p)
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000")
    x = inner_product_draws(s, n_samples, seed)
    N = n_samples
    q = 1.0 - p
    ranks = [math.ceil(q * N), math.ceil((q - 0.005) * N), math.ceil((q + 0.005) * N)]
    ranks = [min(max(r, 1), N) for r in ranks]
    part = np.partition(x, [r - 1 for r in ranks])
    t, lo, hi = (float(part[r - 1]) for r in ranks)
    achieved = float(np.count_nonzero(x >= t)) / N
    se_p = math.sqrt(p * (1.0 - p) / N)
    width = (ranks[2] - ranks[1]) / N
    density = width / (hi - lo) if hi > lo else math.inf
    t_err = se_p / density if density > 0 else math.inf
    return QuantileResult(t, achieved, "monte_carlo", se_p, t_err, N, p)


class _CF:
    """Tail probability of the standardized inner product by inversion."""

    def __init__(self, s: Spectrum, cap: int):
        vals, counts = s.unique_weights()
        keep = vals > 0
        vals, counts = vals[keep], counts[keep]
        if vals.size > cap:
            raise ValueError(f"{vals.size} distinct weights exceeds the inversion cap {cap}")
        self.w2 = (vals / s.l2) ** 2
        self.c = counts.astype(np.float64)
        self.evals = 0
        # cutoff where phi < 1e-12, capped; beyond it a Fourier-weighted rule
        # handles the slowly decaying tail
        cut = 1.0
        while self.log_phi(cut) > math.log(1e-12) and cut < 64.0:
            cut *= 2.0
        self.cut = cut
        self.tail_negligible = self.log_phi(cut) <= math.log(1e-12)

    def log_phi(self, s: float) -> float:
        self.evals += 1
        return -0.5 * float(np.dot(self.c, np.log1p(self.w2 * (s * s))))

    def phi(self, s: float) -> float:
        return math.exp(self.log_phi(s))

    def tail(self, tau: float, epsabs: float) -> tuple[float, float]:
        """``P(S >= tau)`` for the unit-variance sum, with an error bound."""
        if tau == 0.0:
            return 0.5, 0.0
        if tau < 0.0:
            val, err = self.tail(-tau, epsabs)
            return 1.0 - val, err

        def body(s):
            return tau * np.sinc(s * tau / math.pi) * self.phi(s)

        limit = max(200, int(4 * self.cut * tau) + 50)
        i1, e1 = integrate.quad(body, 0.0, self.cut, epsabs=epsabs, epsrel=0.0, limit=limit)
        i2 = e2 = 0.0
        if not self.tail_negligible:
            i2, e2 = integrate.quad(lambda s: self.phi(s) / s, self.cut, np.inf,
                                    weight="sin", wvar=tau, epsabs=epsabs, limlst=100)
        return 0.5 - (i1 + i2) / math.pi, (e1 + e2) / math.pi


def tail_probability_cf(s: Spectrum, t: float, epsabs: float = 1e-10,
                        cap: int = DEFAULT_CF_CAP) -> tuple[float, float]:
    """``P(<X_1, X_2> >= t)`` and its quadrature error bound."""
    return _CF(s, cap).tail(t / s.l2, epsabs)


def solve_threshold_cf(s: Spectrum, p: float, tol: float = 1e-7,
                       cap: int = DEFAULT_CF_CAP) -> QuantileResult:
    """Bisect the inverted tail probability until ``|P(S >= t) - p| <= tol``.

    Raises :class:`CFConvergenceError` if the quadrature error bound is not
    comfortably below ``tol``.
    """
    _check_p(p)
    if tol <= 0:
        raise ValueError("tol must be positive")
    cf = _CF(s, cap)
    epsabs = tol / 20.0

    def tail(tau):
        val, err = cf.tail(tau, epsabs)
        if not err <= tol / 2.0:
            raise CFConvergenceError(
                f"inversion error bound {err:.3g} exceeds tol/2 at t/|alpha|_2={tau:.6g} "
                f"(d_distinct={cf.c.size}, cutoff={cf.cut}, evaluations={cf.evals})"
            )
        return val, err

    # Cantelli: P(S >= tau) <= 1 / (1 + tau^2) for the unit-variance sum
    bound = 1.01 * math.sqrt(1.0 / min(p, 1.0 - p) - 1.0) + 1e-9
    lo, hi = -bound, bound
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, err = tail(mid)
        if abs(val - p) <= tol:
            break
        if val > p:
            lo = mid
        else:
            hi = mid
    else:
        raise CFConvergenceError(f"bisection did not reach tol={tol} (bracket [{lo}, {hi}])")
    h = max(1e-4, 1e-3 * abs(mid))
    density = (tail(mid - h)[0] - tail(mid + h)[0]) / (2 * h)
    t_err = tol / density * s.l2 if density > 0 else math.inf
    return QuantileResult(mid * s.l2, val, "cf_inversion", err + tol, t_err, cf.evals, p)


def solve_threshold(s: Spectrum, p: float, method: str = "auto", *, n_samples: int = DEFAULT_MC_SAMPLES,
                    tol: float = 1e-7, seed: SeedSpec = SeedSpec(0),
                    cap: int = DEFAULT_CF_CAP) -> QuantileResult:
    """Dispatch helper; ``auto`` prefers inversion and falls back to Monte Carlo."""
    if method == "mc":
        return solve_threshold_mc(s, p, n_samples, seed)
    if method == "cf":
        return solve_threshold_cf(s, p, tol, cap)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if s.unique_weights()[0].size <= cap:
        try:
            return solve_threshold_cf(s, p, tol, cap)
        except CFConvergenceError:
            pass
    return solve_threshold_mc(s, p, n_samples, seed)
