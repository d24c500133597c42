"""Graph, matrix and statistic-sample file formats.

Graph files are text::

    rgg-graph v1 n=<n> p=<p>
    1 2
    1 5
    ...

with 1-indexed ``i j`` pairs, ``i < j``, in ascending order.  Matrix files
start with the text line ``symmat v1 n=<n>`` followed by the upper triangle
as little-endian float64 in pair order (1,2), (1,3), ..., (n-1,n).
"""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .sampling import GraphSample, SymMatrixSample

__all__ = [
    "write_graph",
    "read_graph",
    "write_matrix",
    "read_matrix",
    "read_sample",
    "read_values",
    "write_values",
]

_GRAPH_HEADER = re.compile(r"^rgg-graph v1 n=(\d+) p=(\S+)$")
_MATRIX_HEADER = re.compile(rb"^symmat v1 n=(\d+)$")


def write_graph(g: GraphSample, path) -> None:
    lines = [f"rgg-graph v1 n={g.n} p={g.p!r}"]
    lines += [f"{i + 1} {j + 1}" for i, j in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> GraphSample:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty graph file")
    m = _GRAPH_HEADER.match(text[0].strip())
    if not m:
        raise ValueError(f"{path}: bad graph header {text[0]!r}")
    n, p = int(m.group(1)), float(m.group(2))
    edges = []
    prev = (0, 0)
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        i, j = (int(x) for x in line.split())
        if not 1 <= i < j <= n:
            raise ValueError(f"{path}:{lineno}: edge {i} {j} out of range or not i < j")
        if (i, j) <= prev:
            raise ValueError(f"{path}:{lineno}: edges not strictly ascending")
        prev = (i, j)
        edges.append((i - 1, j - 1))
    return GraphSample.from_edges(n, p, edges)


def write_matrix(m: SymMatrixSample, path) -> None:
    with open(path, "wb") as fh:
        fh.write(f"symmat v1 n={m.n}\n".encode("ascii"))
        fh.write(m.entries.astype("<f8").tobytes())


def read_matrix(path) -> SymMatrixSample:
    data = Path(path).read_bytes()
    header, sep, body = data.partition(b"\n")
    m = _MATRIX_HEADER.match(header.strip())
    if not sep or not m:
        raise ValueError(f"{path}: bad matrix header")
    n = int(m.group(1))
    expected = n * (n - 1) // 2 * 8
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, found {len(body)}")
    return SymMatrixSample(n, np.frombuffer(body, dtype="<f8").astype(np.float64))


def read_sample(path) -> GraphSample | SymMatrixSample:
    """Read either file type, dispatching on the header."""
    with open(path, "rb") as fh:
        head = fh.read(9)
    if head.startswith(b"rgg-graph"):
        return read_graph(path)
    if head.startswith(b"symmat"):
        return read_matrix(path)
    raise ValueError(f"{path}: unrecognized sample file")


def read_values(path) -> np.ndarray:
    """One decimal value per line; blank lines ignored."""
    vals = [float(x) for x in Path(path).read_text().split()]
    return np.asarray(vals, dtype=np.float64)


def write_values(values, path) -> None:
    Path(path).write_text("".join(f"{float(v)!r}\n" for v in values))
