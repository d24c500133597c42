"""Samplers for the graph and matrix ensembles.

Ensembles
---------
* ``sample_er``              G(n, p): independent edges.
* ``sample_rgg``             G(n, p, alpha): threshold latent inner products.
* ``sample_wishart``         W(n, alpha): scaled Gram matrix, diagonal removed.
* ``sample_gaussian_matrix`` M(n): iid standard normals above the diagonal.
* ``sample_spiked``          M(n, u) = u * Delta(g) + sqrt(1 - u^2) * M'.

Symmetric matrices and graphs only store the strict upper triangle, in the
row-major pair order (1,2), (1,3), ..., (n-1,n).  Every sampler is a pure
function of its parameters and a :class:`~geodetect.rng.SeedSpec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import NormalStream, SeedSpec, normals, uniforms
from .spectrum import Spectrum

__all__ = [
    "GraphSample",
    "SymMatrixSample",
    "LatentMatrix",
    "pair_indices",
    "gram_upper",
    "sample_latent",
    "sample_er",
    "sample_rgg",
    "sample_wishart",
    "sample_gaussian_matrix",
    "rank_one_deleted",
    "sample_spiked",
    "threshold_graph",
    "GRAM_BLOCK_THRESHOLD",
]

# d * n^2 above which the Gram matrix is accumulated in row blocks
GRAM_BLOCK_THRESHOLD = 2**24
GRAM_BLOCK_ROWS = 1 << 16


def pair_indices(n: int):
    """Row/column indices of the strict upper triangle in storage order."""
    return np.triu_indices(n, 1)


def _num_pairs(n: int) -> int:
    return n * (n - 1) // 2


@dataclass(frozen=True, eq=False)
class GraphSample:
    """Simple undirected graph on ``n`` vertices, stored as a packed bitset."""

    n: int
    p: float
    bits: np.ndarray = field(repr=False)

    @classmethod
    def from_mask(cls, n: int, p: float, mask) -> "GraphSample":
        mask = np.asarray(mask, dtype=bool).ravel()
        if mask.size != _num_pairs(n):
            raise ValueError(f"edge mask has {mask.size} entries, expected {_num_pairs(n)}")
        return cls(int(n), float(p), np.packbits(mask))

    @classmethod
    def from_edges(cls, n: int, p: float, edges) -> "GraphSample":
        adj = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            adj[i, j] = adj[j, i] = True
        return cls.from_mask(n, p, adj[pair_indices(n)])

    @property
    def mask(self) -> np.ndarray:
        return np.unpackbits(self.bits, count=_num_pairs(self.n)).astype(bool)

    def adjacency(self, dtype=np.int64) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=dtype)
        iu = pair_indices(self.n)
        m = self.mask
        a[iu[0][m], iu[1][m]] = 1
        return a + a.T

    def edges(self) -> list[tuple[int, int]]:
        """Edge list, 0-indexed, lexicographically ascending."""
        iu = pair_indices(self.n)
        m = self.mask
        return list(zip(iu[0][m].tolist(), iu[1][m].tolist()))

    @property
    def edge_count(self) -> int:
        return int(np.unpackbits(self.bits, count=_num_pairs(self.n)).sum())

    def permuted(self, perm) -> "GraphSample":
        perm = np.asarray(perm)
        a = self.adjacency()
        a = a[np.ix_(perm, perm)]
        return GraphSample.from_mask(self.n, self.p, a[pair_indices(self.n)].astype(bool))

    def __eq__(self, other):
        return (
            isinstance(other, GraphSample)
            and self.n == other.n
            and np.array_equal(self.bits, other.bits)
        )


@dataclass(frozen=True, eq=False)
class SymMatrixSample:
    """Symmetric ``n x n`` matrix with zero diagonal (upper triangle stored)."""

    n: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64).ravel()
        if e.size != _num_pairs(self.n):
            raise ValueError(f"got {e.size} entries, expected {_num_pairs(self.n)}")
        if not np.all(np.isfinite(e)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "entries", e)

    @classmethod
    def from_dense(cls, m) -> "SymMatrixSample":
        m = np.asarray(m, dtype=np.float64)
        return cls(m.shape[0], m[pair_indices(m.shape[0])])

    def dense(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        iu = pair_indices(self.n)
        m[iu] = self.entries
        return m + m.T

    def permuted(self, perm) -> "SymMatrixSample":
        m = self.dense()
        perm = np.asarray(perm)
        return SymMatrixSample.from_dense(m[np.ix_(perm, perm)])

    def __eq__(self, other):
        return (
            isinstance(other, SymMatrixSample)
            and self.n == other.n
            and np.array_equal(self.entries, other.entries)
        )


@dataclass(frozen=True, eq=False)
class LatentMatrix:
    """``d x n`` latent positions; column ``i`` is the vector of vertex ``i``."""

    values: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def sample_latent(s: Spectrum, n: int, seed: SeedSpec) -> LatentMatrix:
    """Columns iid N(0, diag(alpha)); coordinate j has standard deviation sqrt(alpha_j).

    ``s`` may also be a raw weight array (useful for all-zero weights, which
    a :class:`Spectrum` rejects).  Raw weights are used in the given order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    w = s.weights if isinstance(s, Spectrum) else np.asarray(s, dtype=np.float64).ravel()
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    z = normals(seed, (w.size, n))
    z *= np.sqrt(w)[:, None]
    return LatentMatrix(z)


def _kahan_gram(stream: NormalStream, scale: np.ndarray, n: int, block_rows: int) -> np.ndarray:
    d = scale.size
    total = np.zeros((n, n))
    comp = np.zeros((n, n))
    for start in range(0, d, block_rows):
        stop = min(start + block_rows, d)
        x = stream.take((stop - start, n))
        x *= scale[start:stop, None]
        y = x.T @ x - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def gram_upper(s: Spectrum, n: int, seed: SeedSpec, block_threshold: int = GRAM_BLOCK_THRESHOLD,
               block_rows: int = GRAM_BLOCK_ROWS) -> np.ndarray:
    """Upper-triangle inner products ``<X_i, X_j>`` of the latent vectors.

    The latents consumed are exactly those of ``sample_latent(s, n, seed)``.
    Large problems are streamed in fixed row blocks whose partial Gram
    matrices are merged with compensated summation, so memory stays bounded
    and the result does not depend on anything but the inputs.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if s.d * n * n <= block_threshold:
        x = sample_latent(s, n, seed).values
        g = x.T @ x
    else:
        g = _kahan_gram(NormalStream(seed), np.sqrt(s.weights), n, block_rows)
    return g[pair_indices(n)]


def sample_er(n: int, p: float, seed: SeedSpec) -> GraphSample:
    _check_p(p)
    if n < 1:
        raise ValueError("n must be >= 1")
    u = uniforms(seed, _num_pairs(n))
    return GraphSample.from_mask(n, p, u < p)


def sample_wishart(s: Spectrum, n: int, seed: SeedSpec) -> SymMatrixSample:
    """``W = (X^T X - diag(X^T X)) / |alpha|_2`` for latents drawn under ``seed``."""
    return SymMatrixSample(n, gram_upper(s, n, seed) / s.l2)


def sample_rgg(s: Spectrum, n: int, p: float, t: float, seed: SeedSpec) -> GraphSample:
    """Edge (i, j) iff ``<X_i, X_j> >= t``; ``t`` comes from the quantile solver.

    The comparison is carried out on the ``W`` scale (both sides divided by
    ``|alpha|_2``) so that thresholding ``sample_wishart`` at ``t / |alpha|_2``
    reproduces this graph edge for edge.
    """
    _check_p(p)
    w = gram_upper(s, n, seed) / s.l2
    return GraphSample.from_mask(n, p, w >= t / s.l2)


def sample_gaussian_matrix(n: int, seed: SeedSpec) -> SymMatrixSample:
    if n < 1:
        raise ValueError("n must be >= 1")
    return SymMatrixSample(n, normals(seed, _num_pairs(n)))


def rank_one_deleted(g) -> SymMatrixSample:
    """``Delta(g) = g g^T`` with the diagonal zeroed."""
    g = np.asarray(g, dtype=np.float64).ravel()
    iu = pair_indices(g.size)
    return SymMatrixSample(g.size, g[iu[0]] * g[iu[1]])


def sample_spiked(n: int, u: float, seed: SeedSpec) -> SymMatrixSample:
    """``u * Delta(g) + sqrt(1 - u^2) * M'``.

    ``g`` is drawn from ``seed.child("spike")`` and ``M'`` from
    ``seed.child("noise")``; at ``u = 0`` the result is bitwise
    ``sample_gaussian_matrix(n, seed.child("noise"))``.
    """
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u}")
    g = normals(seed.child("spike"), n)
    noise = sample_gaussian_matrix(n, seed.child("noise")).entries
    spike = rank_one_deleted(g).entries
    return SymMatrixSample(n, u * spike + math.sqrt(1.0 - u * u) * noise)


def threshold_graph(m: SymMatrixSample, t: float, p: float) -> GraphSample:
    """Entrywise indicator ``m_ij >= t``.

    With ``t = t_{p,alpha} / |alpha|_2`` on a Wishart sample this is the RGG;
    with ``t = norm.isf(p)`` on ``M(n)`` it is G(n, p).
    """
    return GraphSample.from_mask(m.n, p, m.entries >= t)


def _check_p(p: float):
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
