"""Counter-based uniform streams.

Each value is a pure function of ``(seed, replication, position)``: a
SplitMix64 finaliser applied to a keyed counter. Any replication can be
regenerated on its own, so the Monte Carlo result does not depend on how
replications are split across workers.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_REP_SALT = np.uint64(0xD1B54A32D192ED03)
_TWO_POW_53 = float(2**53)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _seed_key(seed: int) -> np.uint64:
    return _mix(np.array([int(seed) & _MASK64], dtype=np.uint64))[0]


def replication_keys(seed: int, replications: np.ndarray) -> np.ndarray:
    """One 64-bit key per replication index."""
    r = np.asarray(replications, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(_seed_key(seed) ^ ((r + np.uint64(1)) * _REP_SALT))


def uniforms(seed: int, replications, start: int, count: int) -> np.ndarray:
    """Uniforms on [0, 1) at stream positions ``start .. start+count-1``.

    Returns shape ``(len(replications), count)``; row ``j`` depends only on
    ``seed`` and ``replications[j]``.
    """
    keys = replication_keys(seed, replications)[:, None]
    pos = np.arange(start, start + count, dtype=np.uint64)[None, :] + np.uint64(1)
    with np.errstate(over="ignore"):
        bits = _mix(keys + pos * _GOLDEN)
    return (bits >> np.uint64(11)).astype(np.float64) / _TWO_POW_53


class Substream:
    """Sequential view of one replication's stream, with a ``random(size)`` method.

    Mirrors the part of ``numpy.random.Generator`` that the samplers use.
    """

    def __init__(self, seed: int, replication: int = 0, position: int = 0):
        self.seed = int(seed)
        self.replication = int(replication)
        self.position = int(position)

    def random(self, size: int) -> np.ndarray:
        out = uniforms(self.seed, np.array([self.replication]), self.position, int(size))[0]
        self.position += int(size)
        return out
