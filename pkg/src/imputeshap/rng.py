"""Seeded random streams.

Every random draw in the package goes through :func:`stream`, which returns a
``numpy.random.Generator`` backed by Philox4x64-10 (a counter-based bit
generator).  Streams are keyed by a base seed plus a path of labels, e.g.
``stream(7, 3, "mask-train")``.  The path is turned into a ``SeedSequence``
spawn key, so sibling streams are statistically independent and adding a new
label never perturbs an existing stream.

Algorithm version: ``RNG_VERSION``.  Bumping it is a breaking change for
recorded experiment outputs.
"""

from __future__ import annotations

import zlib

import numpy as np

RNG_VERSION = "philox4x64-10/seedseq-crc32-v1"


def _key(part: int | str) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if part < 0:
        raise ValueError("stream keys must be non-negative")
    return int(part)


def seed_sequence(seed: int, *path: int | str) -> np.random.SeedSequence:
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(p) for p in path))


def stream(seed: int, *path: int | str) -> np.random.Generator:
    """Return the generator for ``(seed, *path)``."""
    return np.random.Generator(np.random.Philox(seed_sequence(seed, *path)))


def derive_seed(seed: int, *path: int | str) -> int:
    """A 63-bit integer seed for ``(seed, *path)``, for APIs that take plain ints."""
    return int(seed_sequence(seed, *path).generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
