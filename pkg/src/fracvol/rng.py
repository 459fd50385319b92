"""Deterministic, splittable Gaussian streams on a counter-based generator.

Every stream is identified by (seed, path index, component index) and backed by
its own Philox instance, so Monte Carlo paths can be generated in any order, or
in parallel, with bit-identical output.  Uniforms come straight from the raw
64-bit counter output and normals are produced by the inverse CDF, which keeps
the mapping from counters to Gaussians explicit and platform-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
_MIX_PATH = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """splitmix64 finalizer; bijective on 64-bit integers."""
    x &= _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def stream_key(seed: int, path_index: int, component: int) -> int:
    """Key of the (path, component) substream: seed XOR a hash of the indices."""
    return (int(seed) & _MASK64) ^ _mix64(path_index * _MIX_PATH + component + 1)


class NormalStream:
    """Uniform and Gaussian draws from a single keyed Philox substream."""

    def __init__(self, key: int):
        self._bits = np.random.Philox(key=key)

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles uniform on the open interval (0, 1)."""
        raw = self._bits.random_raw(n)
        return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via the inverse CDF of the uniform stream."""
        return ndtri(self.uniforms(n))


@dataclass(frozen=True)
class RandomSource:
    """Factory of per-component streams for one simulated path.

    Component indices 0..d-1 are used for driver components; larger tags are
    reserved for auxiliary draws (e.g. the mixing variable).
    """

    seed: int
    path_index: int = 0

    def for_path(self, path_index: int) -> "RandomSource":
        return RandomSource(self.seed, path_index)

    def stream(self, component: int) -> NormalStream:
        return NormalStream(stream_key(self.seed, self.path_index, component))
