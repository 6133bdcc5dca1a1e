"""Deterministic random sampling.

All randomness in the package flows through :class:`RngState`, a thin
single-owner wrapper around a seeded 64-bit generator (PCG64).  Identical
seed and family give an identical sample stream within one build; bit
compatibility across numpy versions or platforms is not promised.
"""

import numpy as np

_FAMILY = "pcg64"


class RngState:
    """Seeded uniform sample stream.

    Drawing advances the stream, so a state instance is single-owner:
    share seeds, not states.
    """

    def __init__(self, seed):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = seed
        self.family = _FAMILY
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, count):
        """Return `count` samples uniform on [0, 1)."""
        if count < 0:
            raise ValueError("count must be non-negative")
        return self._gen.random(int(count))

    def integers(self, low, high, count):
        """Return `count` integers uniform on [low, high)."""
        return self._gen.integers(low, high, size=int(count))

    def __repr__(self):
        return f"RngState(seed={self.seed}, family={self.family!r})"


def gaussian_samples(rng, count):
    """Draw `count` standard-normal samples via Box-Muller.

    The transform consumes pairs of uniforms from `rng`; the stream is
    deterministic per seed.  `count` must be >= 1.
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    pairs = (count + 1) // 2
    # 1 - U maps [0,1) to (0,1] so the log is finite.
    u1 = 1.0 - rng.uniform(pairs)
    u2 = rng.uniform(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = r * np.cos(ang)
    out[1::2] = r * np.sin(ang)
    return out[:count]
