"""Deterministic sampling helpers.

All randomness in the package flows through Philox, a counter-based generator:
the pair (seed, stream) fully determines a draw sequence, so per-sample and
per-sweep-cell streams can be derived without any shared generator state and
results do not depend on scheduling order.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64


def rng_stream(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator keyed by (seed, stream); independent streams for distinct keys."""
    key = np.array([_U64(seed & 0xFFFFFFFFFFFFFFFF), _U64(stream & 0xFFFFFFFFFFFFFFFF)])
    return np.random.Generator(np.random.Philox(key=key))


def sample_on_section(rng: np.random.Generator, n: int, lo: float, hi: float, count: int) -> np.ndarray:
    """Uniform states on the section: one uniformly chosen coordinate is pinned
    to 0, the others are uniform in [lo, hi]."""
    out = rng.uniform(lo, hi, size=(count, n))
    faces = rng.integers(0, n, size=count)
    out[np.arange(count), faces] = 0.0
    return out
