"""Seed splitting.

Every random stream is derived from one 64-bit master seed through a path
of labels, master -> command -> block, using numpy's SeedSequence spawn
keys.  String labels are mapped to integers with CRC32 so the mapping is
stable across runs and platforms.  A block of replicates always gets the
same stream whatever the number of workers, which is what makes results
independent of parallelism.
"""

import zlib

import numpy as np


def _key(label):
    if isinstance(label, str):
        return zlib.crc32(label.encode("utf-8"))
    return int(label)


def seed_sequence(seed, *path):
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(_key(p) for p in path))


def stream(seed, *path):
    """Generator for the stream at `path` below master `seed`."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def block_ranges(n, block_size):
    """Split range(n) into consecutive (start, stop) blocks of fixed size."""
    return [(s, min(s + block_size, n)) for s in range(0, n, block_size)]
