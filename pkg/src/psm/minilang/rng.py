"""Deterministic, splittable random streams for the whole workbench.

The generator is Philox-4x64-10 keyed with (seed, stream).  Streams are
independent, so every consumer (interpreter, per-node fits, simulation
runs, reference draws) derives its own stream from one master seed.
Uniforms take 53 bits per draw; the normal sampler is the inverse-CDF
transform, so the full stream is reproducible from the documented
algorithm names alone (see docs/ml0.md).
"""

from __future__ import annotations

import hashlib

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

from psm.errors import InvalidParams

_TWO53 = 1 << 53


def stream_id(*parts) -> int:
    """Stable 64-bit stream label derived from arbitrary parts."""
    digest = hashlib.sha256(repr(parts).encode()).digest()
    return int.from_bytes(digest[:8], "little")


class SplitRng:
    """One Philox stream; (seed, stream) fully determines the sequence."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        self._gen = Generator(Philox(key=key))

    def split(self, *parts) -> "SplitRng":
        return SplitRng(self.seed, self.stream ^ stream_id(*parts))

    @property
    def generator(self) -> Generator:
        return self._gen

    def uniform01(self) -> float:
        # 53-bit integer plus a half, scaled: strictly inside (0, 1) so
        # the inverse CDF below stays finite.
        return (int(self._gen.integers(0, _TWO53)) + 0.5) / _TWO53

    def normal(self, mean: float, stddev: float) -> float:
        if not (stddev > 0.0) or not np.isfinite(stddev) or not np.isfinite(mean):
            raise InvalidParams(f"normal(mean={mean}, stddev={stddev}): stddev must be > 0")
        return float(mean + stddev * ndtri(self.uniform01()))

    def lognormal(self, log_mean: float, log_stddev: float) -> float:
        if not (log_stddev > 0.0) or not np.isfinite(log_stddev) or not np.isfinite(log_mean):
            raise InvalidParams(
                f"lognormal(log_mean={log_mean}, log_stddev={log_stddev}): log_stddev must be > 0"
            )
        return float(np.exp(self.normal(log_mean, log_stddev)))

    def uniform(self, lo: float, hi: float) -> float:
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise InvalidParams(f"uniform(lo={lo}, hi={hi}): requires finite lo <= hi")
        return float(lo + (hi - lo) * self.uniform01())

    def categorical(self, pairs):
        """pairs: sequence of (value, weight); weights must be positive finite."""
        if not pairs:
            raise InvalidParams("categorical requires at least one value")
        total = 0.0
        for value, weight in pairs:
            w = float(weight)
            if not np.isfinite(w) or w <= 0.0:
                raise InvalidParams(f"categorical weight for {value!r} must be > 0, got {weight}")
            total += w
        u = self.uniform01() * total
        acc = 0.0
        for value, weight in pairs:
            acc += float(weight)
            if u < acc:
                return value
        return pairs[-1][0]


BUILTIN_SAMPLERS = ("normal", "lognormal", "uniform", "categorical")
