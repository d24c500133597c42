"""Divergence machinery for the spiked Gaussian matrix.

The truncated chi-square between ``M(n, u, S)`` (spike ``g`` conditioned on
``S``) and ``M(n)`` reduces to

    chi2 = -1 + E_{g,h ~ mu_S} pair_interaction(g, h, u)

where the pair interaction has the closed form

    (1 - u^4)^(-n(n-1)/4) * exp(u^2/(1-u^4) * X - u^4/(1-u^4) * Y)

with ``X = sum_{i<j} g_i g_j h_i h_j`` and
``Y = 1/2 sum_{i<j} (g_i^2 g_j^2 + h_i^2 h_j^2)``.  All of it is evaluated
in log space.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .rng import NormalStream, SeedSpec
from .sampling import SymMatrixSample, pair_indices

__all__ = [
    "TruncationSet",
    "TvEstimate",
    "UnguardedWarning",
    "in_truncation",
    "sample_truncated_gaussian",
    "sample_truncated_batch",
    "log_density_ratio_spiked",
    "xy_values",
    "log_pair_interaction",
    "pair_interaction",
    "default_truncation_level",
    "chi2_truncated_mc",
    "tv_lower_bound_cdf_gap",
]

MAX_REJECTIONS = 1_000_000
DKW_CONFIDENCE = 0.95


class UnguardedWarning(UserWarning):
    """Estimate requested outside the ``u^2 n`` regime the guard allows."""


@dataclass(frozen=True)
class TruncationSet:
    """``S(a) = {g : |g|_2^2 <= (1+a) n, |g|_4^4 <= 3 (1+a) n}``."""

    a: float
    n: int

    def __post_init__(self):
        if not self.a >= 1.0:
            raise ValueError(f"truncation level a must be >= 1, got {self.a}")
        if self.n < 1:
            raise ValueError("n must be >= 1")

    @property
    def l2_cap(self) -> float:
        return (1.0 + self.a) * self.n

    @property
    def l4_cap(self) -> float:
        return 3.0 * (1.0 + self.a) * self.n


@dataclass(frozen=True)
class TvEstimate:
    """Estimated total-variation bound.

    ``bound`` is a lower bound for ``statistic_cdf_gap`` and an upper bound
    (``sqrt(chi2) / 2``) for ``chi2_mc``.  For the cdf gap, ``stderr`` is the
    95% DKW band half-width; for chi2 it is a delta-method standard error.
    """

    bound: float
    stderr: float
    method: str
    replicates: int
    chi2: float | None = None
    chi2_stderr: float | None = None
    guarded: bool = True

    @property
    def is_lower_bound(self) -> bool:
        return self.method == "statistic_cdf_gap"


def in_truncation(g, ts: TruncationSet) -> bool:
    g = np.asarray(g, dtype=np.float64).ravel()
    if g.size != ts.n:
        raise ValueError(f"vector has length {g.size}, truncation set expects {ts.n}")
    g2 = g * g
    return bool(g2.sum() <= ts.l2_cap and (g2 * g2).sum() <= ts.l4_cap)


def _accept_mask(rows: np.ndarray, ts: TruncationSet) -> np.ndarray:
    r2 = rows * rows
    return (r2.sum(axis=1) <= ts.l2_cap) & ((r2 * r2).sum(axis=1) <= ts.l4_cap)


def sample_truncated_batch(ts: TruncationSet, count: int, seed: SeedSpec,
                           max_rejections: int = MAX_REJECTIONS) -> np.ndarray:
    """First ``count`` accepted Gaussian vectors of the stream, in stream order."""
    stream = NormalStream(seed)
    chunk = max(16, min(1 << 16, count + count // 4 + 16))
    kept = []
    have = 0
    rejected = 0
    while have < count:
        rows = stream.take((chunk, ts.n))
        ok = _accept_mask(rows, ts)
        acc = rows[ok]
        need = count - have
        if acc.shape[0] >= need:
            # rejections are counted only up to the last vector actually used
            last = np.flatnonzero(ok)[need - 1]
            rejected += int(last + 1 - need)
            kept.append(acc[:need])
            have = count
        else:
            rejected += int(chunk - acc.shape[0])
            kept.append(acc)
            have += acc.shape[0]
        if rejected > max_rejections:
            raise RuntimeError(
                f"more than {max_rejections} rejections sampling S(a={ts.a}, n={ts.n}); "
                "the truncation set is too small for rejection sampling"
            )
    return np.concatenate(kept, axis=0)


def sample_truncated_gaussian(ts: TruncationSet, seed: SeedSpec,
                              max_rejections: int = MAX_REJECTIONS) -> np.ndarray:
    """Standard Gaussian vector conditioned on ``S(a)``, by rejection."""
    return sample_truncated_batch(ts, 1, seed, max_rejections)[0]


def log_density_ratio_spiked(A: SymMatrixSample, g, u: float) -> float:
    """``log dM(n,u,g)/dM(n)`` evaluated at ``A``."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")
    g = np.asarray(g, dtype=np.float64).ravel()
    if g.size != A.n:
        raise ValueError("spike length does not match matrix size")
    iu = pair_indices(A.n)
    a = A.entries
    s = 1.0 - u * u
    shift = a - u * g[iu[0]] * g[iu[1]]
    per = -0.5 * math.log(s) - shift * shift / (2.0 * s) + 0.5 * a * a
    return float(per.sum())


def xy_values(g, h) -> tuple[float, float]:
    """Interaction statistics ``(X, Y)`` of two spikes.

    Uses ``X = (<g,h>^2 - sum g_i^2 h_i^2) / 2`` and
    ``sum_{i<j} g_i^2 g_j^2 = (|g|_2^4 - |g|_4^4) / 2``.
    """
    g = np.asarray(g, dtype=np.float64).ravel()
    h = np.asarray(h, dtype=np.float64).ravel()
    if g.shape != h.shape:
        raise ValueError("g and h must have equal lengths")
    g2, h2 = g * g, h * h
    x = 0.5 * (float(g @ h) ** 2 - float(g2 @ h2))
    y = 0.5 * (_pair_square_sum(g2) + _pair_square_sum(h2))
    return x, y


def _pair_square_sum(v2):
    # sum_{i<j} v_i v_j for v = squared coordinates; works row-wise on 2-d input
    s = v2.sum(axis=-1)
    return 0.5 * (s * s - (v2 * v2).sum(axis=-1))


def _log_prefactor(n: int, u: float) -> float:
    return -0.25 * n * (n - 1) * math.log1p(-(u**4))


def _check_u(u):
    if not 0.0 <= u < 1.0:
        raise ValueError(f"u must lie in [0, 1), got {u}")


def log_pair_interaction(g, h, u: float) -> float:
    """Log of :func:`pair_interaction`; never overflows."""
    _check_u(u)
    x, y = xy_values(g, h)
    n = np.asarray(g).size
    c = 1.0 - u**4
    return _log_prefactor(n, u) + (u * u * x - u**4 * y) / c


def pair_interaction(g, h, u: float, log: bool = False) -> float:
    """``E_A [dM(n,u,g)/dM(n) * dM(n,u,h)/dM(n)]`` in closed form.

    With ``log=True`` the logarithm is returned.  Otherwise an
    ``OverflowError`` is raised if the value does not fit in a float.
    """
    lv = log_pair_interaction(g, h, u)
    if log:
        return lv
    if lv > 709.0:
        raise OverflowError(f"pair interaction exp({lv:.1f}) overflows; call with log=True")
    return math.exp(lv)


def default_truncation_level(n: int, u: float) -> float:
    """``a = (u^2 n)^(-1/4)``, clamped to at least 1."""
    if u == 0.0:
        return math.inf
    return max(1.0, (u * u * n) ** -0.25)


def _pair_mean(G: np.ndarray, u: float, control: bool = True) -> float:
    """Mean of ``pair_interaction - 1`` over all distinct pairs of rows of G.

    With ``control`` the term ``k * X`` (``k`` the first-order coefficient of
    the interaction in ``X``) is subtracted from every pair.  Truncation sets
    are invariant under flipping the sign of any coordinate, so
    ``E_{mu_S} X = 0`` and the mean is unchanged, while the dominant
    fluctuation of the pair average is removed.
    """
    B, n = G.shape
    c = 1.0 - u**4
    G2 = G * G
    q = _pair_square_sum(G2)
    lp = _log_prefactor(n, u)
    k = math.exp(lp) * u * u / c if control else 0.0
    total = 0.0
    comp = 0.0
    step = max(1, (1 << 22) // max(B, 1))
    for start in range(0, B - 1, step):
        stop = min(start + step, B - 1)
        rows = slice(start, stop)
        ip = G[rows] @ G.T
        s4 = G2[rows] @ G2.T
        x = 0.5 * (ip * ip - s4)
        y = 0.5 * (q[rows, None] + q[None, :])
        lv = lp + (u * u * x - u**4 * y) / c
        vals = np.expm1(lv) - k * x
        # keep only pairs (i, j) with j > i
        cols = np.arange(B)[None, :]
        ids = np.arange(start, stop)[:, None]
        part = float(np.sum(np.where(cols > ids, vals, 0.0)))
        yk = part - comp
        tk = total + yk
        comp = (tk - total) - yk
        total = tk
    return total / (B * (B - 1) / 2)


def chi2_truncated_mc(n: int, u: float, a: float | None = None, replicates: int = 40_000,
                      seed: SeedSpec = SeedSpec(0), *, batches: int = 10,
                      guard: float = 0.1, max_rel_stderr: float | None = 0.5) -> TvEstimate:
    """Monte Carlo truncated chi-square of the spiked ensemble against ``M(n)``.

    ``replicates`` truncated spikes are drawn and split into ``batches``
    independent groups.  Within a group the pair interaction is averaged over
    all distinct pairs, an unbiased U-statistic for ``E_{g,h}``.  The
    leading fluctuation, linear in ``X``, has mean zero under the truncated
    law and is removed as a control variate.  The standard error comes from
    the spread of the group means.

    The implied TV bound is ``sqrt(chi2) / 2``.  Outside ``u^2 n <= guard``
    a :class:`UnguardedWarning` is issued and the estimate is flagged.
    """
    _check_u(u)
    if n < 2:
        raise ValueError("n must be >= 2")
    if batches < 2 or replicates < 2 * batches:
        raise ValueError("need at least 2 batches of at least 2 draws")
    if u == 0.0:
        return TvEstimate(0.0, 0.0, "chi2_mc", replicates, 0.0, 0.0, True)
    guarded = u * u * n <= guard
    if not guarded:
        warnings.warn(f"u^2 n = {u * u * n:.3g} exceeds the guard {guard}; estimate is unguarded",
                      UnguardedWarning, stacklevel=2)
    a = default_truncation_level(n, u) if a is None else a
    ts = TruncationSet(a, n)
    per = replicates // batches
    means = np.array([
        _pair_mean(sample_truncated_batch(ts, per, seed.child("chi2-batch", b)), u)
        for b in range(batches)
    ])
    chi2 = float(means.mean())
    se = float(means.std(ddof=1) / math.sqrt(batches))
    if max_rel_stderr is not None and se > max_rel_stderr * abs(chi2):
        raise RuntimeError(
            f"chi2 estimate {chi2:.3g} has stderr {se:.3g} (> {max_rel_stderr:.0%} relative); "
            "increase replicates"
        )
    tv = 0.5 * math.sqrt(max(chi2, 0.0))
    tv_se = se / (4.0 * math.sqrt(chi2)) if chi2 > 0 else 0.5 * math.sqrt(se)
    return TvEstimate(min(tv, 1.0), tv_se, "chi2_mc", per * batches, chi2, se, guarded)


def tv_lower_bound_cdf_gap(samples0, samples1) -> TvEstimate:
    """Largest gap between two empirical CDFs of one statistic.

    Any statistic T satisfies ``TV >= sup_t |P0(T > t) - P1(T > t)|``; the
    empirical version is accompanied by the 95% DKW band half-width
    ``sum_k sqrt(log(2 / 0.05) / (2 n_k))``.
    """
    x0 = np.sort(np.asarray(samples0, dtype=np.float64).ravel())
    x1 = np.sort(np.asarray(samples1, dtype=np.float64).ravel())
    if x0.size == 0 or x1.size == 0:
        raise ValueError("both sample sets must be nonempty")
    grid = np.union1d(x0, x1)
    f0 = np.searchsorted(x0, grid, side="right") / x0.size
    f1 = np.searchsorted(x1, grid, side="right") / x1.size
    gap = float(np.max(np.abs(f0 - f1)))
    level = math.log(2.0 / (1.0 - DKW_CONFIDENCE))
    band = math.sqrt(level / (2 * x0.size)) + math.sqrt(level / (2 * x1.size))
    return TvEstimate(min(max(gap, 0.0), 1.0), band, "statistic_cdf_gap", int(min(x0.size, x1.size)))
