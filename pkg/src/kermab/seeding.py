"""Labeled RNG substreams.

Every random source in a trial is derived from one integer seed plus a
fixed label path, e.g. ``substream(seed, "noise", 3)``.  Adding agents or
purposes never shifts the stream another consumer sees.
"""

from __future__ import annotations

import zlib

import numpy as np


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"integer labels must be non-negative, got {label}")
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def seed_sequence(seed: int, *labels) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF] + [_label_key(x) for x in labels])


def substream(seed: int, *labels) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *labels)))


def split(base_seed: int, index: int) -> int:
    """Child integer seed for trial ``index`` of an experiment."""
    return int(seed_sequence(base_seed, "trial", index).generate_state(1, dtype=np.uint64)[0] >> 1)
