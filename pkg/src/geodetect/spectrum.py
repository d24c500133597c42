"""Weight vectors of the anisotropic latent Gaussian and their norms.

A :class:`Spectrum` holds the diagonal ``alpha`` of the latent covariance,
sorted nonincreasing.  The two dimension measures that matter for detection
are

* ``effective_dimension = (|alpha|_2 / |alpha|_3) ** 6``, which governs the
  signed-triangle detection threshold ``n**3 ~ effective_dimension``;
* ``comparison_dimension = (|alpha|_2 / |alpha|_4) ** 4``, the weaker
  quantity that appears in earlier convergence results.

The split into large and small coordinates and the interpolating sequence
that adds the large coordinates back one at a time are also here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Spectrum",
    "SpectrumSplit",
    "PeelStep",
    "effective_dimension",
    "comparison_dimension",
    "split",
    "peel_sequence",
    "peel_bound_proxy",
    "parse_spectrum",
    "read_spectrum",
    "write_spectrum",
]


def _power_sum(w: np.ndarray, k: int) -> float:
    # math.fsum is exactly rounded, which keeps the cached norms honest at large d
    return math.fsum((w**k).tolist())


class Spectrum:
    """Nonnegative weights, sorted nonincreasing, with cached norms.

    Parameters
    ----------
    weights : array_like
        Coordinate variances.  Need not be sorted; zeros are allowed but not
        an all-zero vector.
    """

    __slots__ = ("_w", "l2", "l3", "l4", "linf", "_sums", "_unique")

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size == 0:
            raise ValueError("spectrum must have at least one weight")
        if not np.all(np.isfinite(w)):
            raise ValueError("spectrum weights must be finite")
        if np.any(w < 0):
            raise ValueError("spectrum weights must be nonnegative")
        w = np.sort(w)[::-1].copy()
        w.setflags(write=False)
        self._w = w
        self.linf = float(w[0])
        if self.linf == 0.0:
            raise ValueError("all-zero spectrum")
        # normalize by the max before powering so tiny or huge weights do not
        # under/overflow
        s = w / self.linf
        self._sums = {k: _power_sum(s, k) for k in (2, 3, 4)}
        self.l2 = self.linf * math.sqrt(self._sums[2])
        self.l3 = self.linf * self._sums[3] ** (1 / 3)
        self.l4 = self.linf * self._sums[4] ** 0.25
        self._unique = None

    @property
    def weights(self) -> np.ndarray:
        return self._w

    @property
    def d(self) -> int:
        return int(self._w.size)

    def __len__(self):
        return self.d

    def __repr__(self):
        head = ", ".join(f"{x:.4g}" for x in self._w[:4])
        more = ", ..." if self.d > 4 else ""
        return f"Spectrum(d={self.d}, [{head}{more}])"

    def __eq__(self, other):
        return isinstance(other, Spectrum) and np.array_equal(self._w, other._w)

    def __hash__(self):
        return hash(self._w.tobytes())

    def scaled(self, c: float) -> "Spectrum":
        return Spectrum(self._w * c)

    def unique_weights(self):
        """Distinct weights (descending) and their multiplicities."""
        if self._unique is None:
            vals, counts = np.unique(self._w, return_counts=True)
            self._unique = (vals[::-1].copy(), counts[::-1].copy())
        return self._unique

    @property
    def effective_dimension(self) -> float:
        return effective_dimension(self)

    @property
    def comparison_dimension(self) -> float:
        return comparison_dimension(self)


def effective_dimension(s: Spectrum) -> float:
    """``(|alpha|_2 / |alpha|_3) ** 6``; exactly d for a flat spectrum."""
    # ratio of power sums avoids the cube roots, so flat spectra come out exact
    return s._sums[2] ** 3 / s._sums[3] ** 2


def comparison_dimension(s: Spectrum) -> float:
    """``(|alpha|_2 / |alpha|_4) ** 4``."""
    return s._sums[2] ** 2 / s._sums[4]


@dataclass(frozen=True)
class SpectrumSplit:
    """Large/small partition of a spectrum.

    ``r`` is the smallest prefix length whose squared mass reaches a third
    of the total.  ``alpha_minus`` is ``None`` when the remainder is empty or
    identically zero, which can only happen in the degenerate case.
    """

    spectrum: Spectrum
    r: int
    alpha_plus: Spectrum
    alpha_minus: Spectrum | None
    degenerate: bool


def split(s: Spectrum) -> SpectrumSplit:
    w = s.weights
    sq = w**2
    total = math.fsum(sq.tolist())
    cum = np.cumsum(sq)
    # smallest r with 3 * |alpha_plus|^2 >= |alpha|^2
    r = int(np.argmax(3.0 * cum >= total)) + 1
    plus_sq = math.fsum(sq[:r].tolist())
    degenerate = 3.0 * plus_sq > 2.0 * total
    rest = w[r:]
    minus = Spectrum(rest) if rest.size and rest[0] > 0 else None
    return SpectrumSplit(s, r, Spectrum(w[:r]), minus, bool(degenerate))


@dataclass(frozen=True)
class PeelStep:
    t: int
    alpha_t: Spectrum
    u_t: float


def _require_nondegenerate(sp: SpectrumSplit):
    if sp.degenerate:
        raise ValueError(
            "degenerate split: the top weight carries more than 2/3 of the squared "
            "mass, so the peel argument has nothing to bound"
        )


def peel_sequence(sp: SpectrumSplit) -> list[PeelStep]:
    """Spectra ``alpha^t`` for t = 1..r, adding the large weights back one by one.

    ``alpha^t = (alpha_1..alpha_t, alpha_{r+1}..alpha_d)`` and the spike
    strength of step t is ``u_t = alpha_t / |alpha^t|_2``.  ``alpha^0`` is
    ``sp.alpha_minus`` and the last step reproduces the full spectrum.
    """
    _require_nondegenerate(sp)
    w = sp.spectrum.weights
    r = sp.r
    minus = w[r:]
    minus_sq = math.fsum((minus**2).tolist())
    steps = []
    for t in range(1, r + 1):
        alpha_t = Spectrum(np.concatenate([w[:t], minus]))
        norm_t = math.sqrt(math.fsum((w[:t] ** 2).tolist()) + minus_sq)
        steps.append(PeelStep(t, alpha_t, float(w[t - 1] / norm_t)))
    return steps


def peel_bound_proxy(s: Spectrum, n: int) -> tuple[float, float, float]:
    """Diagnostic terms of the peel bound, constants omitted.

    Returns ``(sum_term, l3_term, minus_comparison_dim)`` where
    ``sum_term = sum_{t<=r} (alpha_t/|alpha|_2)^3 n^{3/2}``,
    ``l3_term = (|alpha|_3/|alpha|_2)^3 n^{3/2}`` and
    ``minus_comparison_dim = comparison_dimension(alpha_minus)``.
    """
    sp = split(s)
    _require_nondegenerate(sp)
    w = s.weights
    n32 = float(n) ** 1.5
    sum_term = math.fsum(((w[: sp.r] / s.l2) ** 3).tolist()) * n32
    l3_term = (s.l3 / s.l2) ** 3 * n32
    return sum_term, l3_term, comparison_dimension(sp.alpha_minus)


def parse_spectrum(text: str) -> Spectrum:
    """Build a spectrum from a generator shorthand.

    ``flat:<d>``, ``power:<d>:<gamma>`` (alpha_i = i^-gamma),
    ``geometric:<d>:<rho>`` (alpha_i = rho^(i-1)) or ``file:<path>``.
    ``gamma`` may be written as a fraction, e.g. ``power:4096:1/3``.
    """
    kind, _, rest = text.strip().partition(":")
    args = rest.split(":") if rest else []
    try:
        if kind == "flat" and len(args) == 1:
            return Spectrum(np.ones(_dim(args[0])))
        if kind == "power" and len(args) == 2:
            d = _dim(args[0])
            return Spectrum(np.arange(1, d + 1, dtype=np.float64) ** -_number(args[1]))
        if kind == "geometric" and len(args) == 2:
            d = _dim(args[0])
            return Spectrum(_number(args[1]) ** np.arange(d, dtype=np.float64))
        if kind == "file" and rest:
            return read_spectrum(rest)
    except ZeroDivisionError as exc:
        raise ValueError(f"bad spectrum spec {text!r}") from exc
    raise ValueError(f"unrecognized spectrum spec {text!r}")


def _dim(s: str) -> int:
    d = int(float(s))
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {s}")
    return d


def _number(s: str) -> float:
    if "/" in s:
        num, den = s.split("/")
        return float(num) / float(den)
    return float(s)


def read_spectrum(path) -> Spectrum:
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.append(float(line))
    return Spectrum(values)


def write_spectrum(s: Spectrum, path) -> None:
    Path(path).write_text("".join(f"{x!r}\n" for x in s.weights.tolist()))
