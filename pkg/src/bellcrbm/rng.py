"""Named, reproducible random streams derived from a single root seed."""
from __future__ import annotations

import zlib

import numpy as np

_SEED_MASK = (1 << 63) - 1


def stream(root_seed: int, *labels: str) -> np.random.Generator:
    """Independent generator for the child stream named by ``labels``.

    The splitting rule is fixed: the seed sequence entropy is the root seed
    followed by the CRC32 of each label, so the same ``(seed, labels)`` pair
    yields the same stream on any platform, and differently labelled streams
    are statistically independent. Parallel chains should each take their own
    stream, e.g. ``stream(seed, "chain", str(i))``.
    """
    entropy = [int(root_seed) & _SEED_MASK]
    entropy += [zlib.crc32(label.encode("utf-8")) for label in labels]
    return np.random.default_rng(np.random.SeedSequence(entropy))
