"""Counter-based random streams.

Every random quantity in the package is drawn from a Philox4x64 stream keyed
by ``(master_seed, stream_id)``.  The value at a given draw index is a pure
function of the key and the index, so replicates can run in any order or in
parallel and still reproduce bit-for-bit.

Gaussians come from the inverse CDF of 53-bit uniforms rather than from a
rejection method, which keeps the draw-index to value mapping one-to-one.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = ["SeedSpec", "stable_hash", "uniforms", "normals", "NormalStream"]

_MASK64 = (1 << 64) - 1
_TWO_M53 = 2.0**-53


def stable_hash(*parts) -> int:
    """Platform-independent 64-bit hash of a tuple of ints/strings/floats."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        if isinstance(part, bool):
            part = int(part)
        if isinstance(part, int):
            h.update(b"i" + (part & _MASK64).to_bytes(8, "little"))
        elif isinstance(part, float):
            h.update(b"f" + struct.pack("<d", part))
        else:
            data = str(part).encode("utf-8")
            h.update(b"s" + len(data).to_bytes(4, "little") + data)
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class SeedSpec:
    """Key of one random stream: a master seed plus a stream index."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")
            object.__setattr__(self, name, int(value))

    def child(self, *tags) -> "SeedSpec":
        """Derive an independent sub-stream, e.g. ``seed.child("spike")``."""
        return SeedSpec(self.master_seed, stable_hash(self.stream_id, *tags))

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(key=np.array([self.master_seed, self.stream_id], dtype=np.uint64))


def _to_uniform(raw: np.ndarray) -> np.ndarray:
    # top 53 bits, shifted by half an ulp so 0 and 1 are never produced
    out = (raw >> np.uint64(11)).astype(np.float64)
    out += 0.5
    out *= _TWO_M53
    return out


def uniforms(seed: SeedSpec, shape) -> np.ndarray:
    """Uniforms on the open interval (0, 1), filled in C order."""
    shape = (shape,) if np.isscalar(shape) else tuple(shape)
    count = int(np.prod(shape, dtype=np.int64))
    raw = seed.bit_generator().random_raw(count)
    return _to_uniform(np.asarray(raw, dtype=np.uint64)).reshape(shape)


def normals(seed: SeedSpec, shape) -> np.ndarray:
    """Standard normals by inverse-CDF transform, filled in C order."""
    u = uniforms(seed, shape)
    return ndtri(u, out=u)


class NormalStream:
    """Sequential reader over one stream, for consumers that work in blocks.

    Reading ``k`` values and then ``m`` more yields exactly the same numbers
    as ``normals(seed, k + m)``.
    """

    def __init__(self, seed: SeedSpec):
        self.seed = seed
        self._bg = seed.bit_generator()
        self.position = 0

    def take(self, shape) -> np.ndarray:
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        count = int(np.prod(shape, dtype=np.int64))
        raw = np.asarray(self._bg.random_raw(count), dtype=np.uint64)
        self.position += count
        u = _to_uniform(raw)
        return ndtri(u, out=u).reshape(shape)
