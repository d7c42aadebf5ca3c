"""Deterministic per-sample random streams.

Every sample drawn during training gets its own stream, keyed by a tuple of
non-negative integers such as ``(seed, purpose, epoch, batch, index)``. The
key is fed to :class:`numpy.random.SeedSequence`, so equal keys give equal
draws no matter in which order the streams are created or consumed.
"""
from __future__ import annotations

import bisect
from itertools import accumulate

import numpy as np

# Purpose tags keep the streams of unrelated consumers apart.
AUGMENT = 0
NEGATIVES = 1
CANDIDATES = 2
SHUFFLE = 3
INIT = 4
INSPECT = 5

_BUFFER = 64


class RngStream:
    """Seeded stream of uniform, integer, categorical and sign draws.

    Scalar draws are served from a buffer of doubles refilled in blocks, which
    is an order of magnitude cheaper than calling the generator per draw.
    """

    __slots__ = ("key", "_gen", "_buf", "_pos")

    def __init__(self, *key: int):
        if not key:
            raise ValueError("RngStream needs at least one key component")
        self.key = key
        # SeedSequence rejects negative components itself.
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))
        self._buf = ()
        self._pos = 0

    @property
    def generator(self) -> np.random.Generator:
        """Underlying numpy generator, for bulk vectorised draws."""
        return self._gen

    def random(self) -> float:
        """Uniform double in [0, 1)."""
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BUFFER).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def randint(self, n: int) -> int:
        """Uniform integer in ``0..n-1``."""
        if n < 1:
            raise ValueError(f"randint needs n >= 1, got {n}")
        return min(int(self.random() * n), n - 1)

    def sign(self) -> int:
        """Fair draw from {-1, +1}."""
        return -1 if self.random() < 0.5 else 1

    def categorical(self, cum_weights) -> int:
        """Index drawn with probabilities given by cumulative weights.

        ``cum_weights`` must be non-decreasing with a positive last entry; the
        weights need not be normalised.
        """
        u = self.random() * cum_weights[-1]
        return min(bisect.bisect_right(cum_weights, u), len(cum_weights) - 1)

    def choice(self, weights) -> int:
        return self.categorical(list(accumulate(weights)))

    def sample(self, pool, k: int) -> list:
        """``k`` distinct elements of ``pool``, uniformly without replacement."""
        pool = list(pool)
        if k > len(pool):
            raise ValueError(f"cannot sample {k} from {len(pool)} elements")
        picks = self._gen.choice(len(pool), size=k, replace=False)
        return [pool[i] for i in picks]

    def shuffled(self, items) -> list:
        items = list(items)
        return self.sample(items, len(items))

    def __repr__(self):
        return f"RngStream{self.key}"
