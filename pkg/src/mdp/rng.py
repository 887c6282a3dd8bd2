"""The repository's single random number generator.

Every stochastic operation takes an explicit ``numpy.random.Generator``
built here. The bit generator is Philox-4x64, a counter-based generator:
its whole state is a 128-bit key plus a 256-bit counter, so a stream is
fully determined by its key and reproduces identically on every platform.

Keys are derived from a base seed and any number of stream labels by
hashing ``"seed|label|label..."`` with SHA-256 and keeping 128 bits, so
``make_rng(7, "learn", 3)`` names one fixed stream forever.
"""
import hashlib
from typing import List

import numpy as np

GENERATOR_NAME = "philox4x64-sha256"


def derive_key(seed: int, *stream: object) -> int:
    """Return the 128-bit Philox key for ``seed`` and stream labels."""
    text = "|".join(str(part) for part in (seed, *stream))
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return int(digest[:32], 16)


def make_rng(seed: int, *stream: object) -> np.random.Generator:
    """Build the deterministic generator for ``seed`` and stream labels."""
    return np.random.Generator(np.random.Philox(key=derive_key(seed, *stream)))


def substreams(rng: np.random.Generator, count: int) -> List[np.random.Generator]:
    """Split ``rng`` into ``count`` independent generators.

    One key is drawn from ``rng``; substream ``i`` is that key's Philox
    stream jumped ``i + 1`` times (each jump skips 2**128 draws). The result
    depends only on the state of ``rng``, not on how the substreams are
    later consumed.
    """
    base_key = int(rng.integers(0, 2**63, dtype=np.int64))
    base = np.random.Philox(key=base_key)
    return [np.random.Generator(base.jumped(i + 1)) for i in range(count)]
