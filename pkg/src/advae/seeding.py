"""Named sub-seed derivation.

All randomness in a run flows from one master seed; every consumer derives
its own stream from (seed, path of names/indices), so runs are reproducible
and resumable without serializing generator state.
"""

from __future__ import annotations

import zlib

import numpy as np


def _path_entropy(path) -> list[int]:
    out = []
    for p in path:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode("utf-8")))
        else:
            out.append(int(p))
    return out


def seed_sequence(master_seed: int, *path) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed)] + _path_entropy(path))


def sub_rng(master_seed: int, *path) -> np.random.Generator:
    """Generator for a named sub-stream, e.g. sub_rng(seed, "step", 42)."""
    return np.random.default_rng(seed_sequence(master_seed, *path))


def sub_seed(master_seed: int, *path) -> int:
    """A 32-bit integer seed for consumers that take plain seeds (torch)."""
    return int(seed_sequence(master_seed, *path).generate_state(1)[0])
