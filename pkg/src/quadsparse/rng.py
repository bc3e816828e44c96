"""Counter-based random streams.

Sensing entries are produced by Philox4x32-10 (Salmon et al., "Parallel random
numbers: as easy as 1, 2, 3", SC'11) evaluated directly on the counter
``(c, r, i, tag)`` under a 64-bit key derived from the instance seed.  Any
entry ``A_i[r, c]`` can therefore be regenerated on its own, in any order and
on any worker, and always yields the same bits.

A counter maps to one standard normal through Box-Muller on two 53-bit
uniforms built from the four output words (cosine branch only).

Signals and noise use numpy's own Philox bit generator keyed by
``(seed, tag)``; those are drawn in one block so stream position never
depends on the caller.
"""

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# stream tags (fourth counter word / high key word)
TAG_MATRIX = 1
TAG_VECTOR = 2
TAG_SIGNAL = 3
TAG_NOISE = 4
TAG_SUPPORT = 5
TAG_PROBE = 6
TAG_CHI2 = 7


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    counter: four broadcastable uint32-valued arrays.
    key: pair of uint32 ints.
    Returns a tuple of four uint64 arrays holding 32-bit words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0, k1 = int(key[0]) & 0xFFFFFFFF, int(key[1]) & 0xFFFFFFFF
    for rnd in range(rounds):
        if rnd:
            k0 = (k0 + PHILOX_W0) & 0xFFFFFFFF
            k1 = (k1 + PHILOX_W1) & 0xFFFFFFFF
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0, c1, c2, c3 = (hi1 ^ c1 ^ np.uint64(k0), lo1,
                          hi0 ^ c3 ^ np.uint64(k1), lo0)
    return c0, c1, c2, c3


def seed_key(seed):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return seed & 0xFFFFFFFF, seed >> 32


def _uniform53(hi, lo):
    # 27 + 26 bits -> [0, 1)
    return ((hi >> np.uint64(5)).astype(np.float64) * 67108864.0
            + (lo >> np.uint64(6)).astype(np.float64)) / 9007199254740992.0


def normal_at(seed, i, r, c, tag=TAG_MATRIX):
    """Standard normals addressed by (i, r, c); arguments broadcast."""
    w0, w1, w2, w3 = philox4x32((c, r, i, tag), seed_key(seed))
    u1 = 1.0 - _uniform53(w0, w1)  # (0, 1]
    u2 = _uniform53(w2, w3)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def generator(seed, tag):
    """numpy Generator on a Philox stream keyed by (seed, tag)."""
    key = (int(seed) & 0xFFFFFFFFFFFFFFFF) | (int(tag) << 64)
    return np.random.Generator(np.random.Philox(key=key))


def fresh_seed():
    return int(np.random.SeedSequence().entropy & 0xFFFFFFFFFFFFFFFF)
