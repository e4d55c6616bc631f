"""Counter-based random numbers for reproducible, order-independent sampling.

Every random quantity in this package is a pure function of
``(master seed, replica index, purpose stream, counter)``:

    u = mix64(stream_key + counter * GOLDEN) / 2**64

where ``mix64`` is the SplitMix64 finalizer.  Bond states use the canonical
edge index as the counter; cluster marks use the vertex index of the
cluster's canonical (lexicographically minimal) member.  Because draws are
indexed rather than sequential, any subset of edges or vertices can be
generated lazily, in any order, on any number of threads, and always agrees
bit for bit with a full-array generation.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Purpose streams: keep bond states and colour marks on independent streams
# so the same replica can be re-coloured without touching its bonds.
STREAM_BONDS = 0x8536_2A4B_9D1E_0C7F
STREAM_MARKS = 0x51A0_93E4_6BB5_28D1
STREAM_GENERIC = 0xC2B2_AE3D_27D4_EB4F


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a 64-bit word (pure Python, scalar)."""
    z &= _MASK
    z ^= z >> 30
    z = (z * _MIX1) & _MASK
    z ^= z >> 27
    z = (z * _MIX2) & _MASK
    z ^= z >> 31
    return z


def derive_key(*words: int) -> int:
    """Fold any number of 64-bit words into one stream key."""
    acc = 0x6A09E667F3BCC909  # sqrt(2) fraction bits, an arbitrary nonzero start
    for w in words:
        acc = mix64((acc + (w & _MASK) * _GOLDEN) & _MASK)
    return acc


def replica_seed(master_seed: int, replica: int) -> int:
    """Per-replica 64-bit seed; replicas are independent streams of the master."""
    return derive_key(master_seed, replica)


def uniform_at(key: int, index: int) -> float:
    """The uniform [0,1) draw at a single counter position (lazy access)."""
    z = mix64((key + (index & _MASK) * _GOLDEN) & _MASK)
    return (z >> 11) * 2.0**-53


def uniform_block(key: int, start: int, count: int) -> np.ndarray:
    """Uniform [0,1) draws at counter positions start..start+count-1.

    Vectorised equivalent of ``[uniform_at(key, i) for i in range(...)]``.
    """
    idx = np.arange(start, start + count, dtype=np.uint64)
    return uniform_gather(key, idx)


def uniform_gather(key: int, indices: np.ndarray) -> np.ndarray:
    """Uniform [0,1) draws at arbitrary counter positions (vectorised)."""
    z = (np.uint64(key) + indices.astype(np.uint64) * np.uint64(_GOLDEN))
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX2)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)) * 2.0**-53
