import struct

import numpy as np
import pytest

from geodetect import io
from geodetect.rng import SeedSpec
from geodetect.sampling import GraphSample, sample_er, sample_gaussian_matrix


def test_graph_round_trip_and_layout(tmp_path):
    g = sample_er(12, 0.37, SeedSpec(1))
    path = tmp_path / "g.txt"
    io.write_graph(g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "rgg-graph v1 n=12 p=0.37"
    pairs = [tuple(map(int, ln.split())) for ln in lines[1:]]
    assert pairs == sorted(pairs) and all(1 <= i < j <= 12 for i, j in pairs)
    back = io.read_graph(path)
    assert back == g and back.p == g.p
    assert io.read_sample(path) == g


def test_matrix_round_trip_and_layout(tmp_path):
    m = sample_gaussian_matrix(5, SeedSpec(2))
    path = tmp_path / "m.bin"
    io.write_matrix(m, path)
    raw = path.read_bytes()
    header, body = raw.split(b"\n", 1)
    assert header == b"symmat v1 n=5"
    assert list(struct.unpack("<10d", body)) == m.entries.tolist()
    assert io.read_sample(path) == m


@pytest.mark.parametrize(
    "text",
    [
        "rgg-graph v1 n=3 p=0.5\n2 1\n",
        "rgg-graph v1 n=3 p=0.5\n1 4\n",
        "rgg-graph v1 n=3 p=0.5\n1 3\n1 2\n",
        "rgg-graph v1 n=3 p=0.5\n1 2\n1 2\n",
        "graph n=3\n",
    ],
)
def test_graph_reader_validates(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(ValueError):
        io.read_graph(path)


def test_matrix_reader_validates(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"symmat v1 n=3\n" + np.zeros(2).tobytes())
    with pytest.raises(ValueError):
        io.read_matrix(path)
    path.write_bytes(b"nonsense")
    with pytest.raises(ValueError):
        io.read_sample(path)


def test_empty_graph_file(tmp_path):
    g = GraphSample.from_edges(4, 0.5, [])
    path = tmp_path / "e.txt"
    io.write_graph(g, path)
    assert io.read_graph(path) == g


def test_values_round_trip(tmp_path):
    v = np.array([0.1, -2.5e-300, 3.0, 1e10])
    path = tmp_path / "v.txt"
    io.write_values(v, path)
    assert io.read_values(path).tolist() == v.tolist()
