"""Seeded random streams.

Every random draw comes from a PCG64 generator whose SeedSequence entropy is
``[seed, crc32(tag), *indices]``. Independent units of work (a room, a scan, a
fold) get their own stream, so results do not depend on execution order.
"""

import zlib

import numpy as np


def make_rng(seed: int, tag: str, *indices: int) -> np.random.Generator:
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(tag.encode("utf-8"))]
    entropy += [int(i) for i in indices]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
