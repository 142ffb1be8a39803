"""Estimators of ordered scales when the locations are known.

Every estimator accepts a :class:`KnownLocStats` whose sums may carry leading
batch dimensions (shape ``(..., k)``); outputs have the same shape. Component
indices are zero-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .loss import LinexShape, bsee_coefficient, truncation_coefficient_known
from .pooling import max_min_pooled


@dataclass(frozen=True)
class KnownLocStats:
    """Sample sizes ``n`` and per-population sums ``S``."""

    n: tuple[int, ...]
    S: np.ndarray

    def __post_init__(self) -> None:
        n = tuple(int(v) for v in self.n)
        S = np.array(self.S, dtype=float)
        if len(n) < 2:
            raise ValueError(f"need at least two populations, got k={len(n)}")
        if any(v < 1 for v in n):
            raise ValueError(f"sample sizes must be >= 1, got {n}")
        if S.ndim == 0 or S.shape[-1] != len(n):
            raise ValueError(f"S must have trailing length {len(n)}, got shape {S.shape}")
        if not np.all(np.isfinite(S)) or np.any(S <= 0):
            raise ValueError("every sum S_i must be finite and > 0")
        S.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "S", S)

    @property
    def k(self) -> int:
        return len(self.n)

    @property
    def n_total(self) -> int:
        return sum(self.n)

    def ratios(self, i: int) -> np.ndarray:
        """``U_j = S_j / S_i`` for every ``j`` (entry ``i`` is 1)."""
        _check_index(i, self.k)
        return self.S / self.S[..., i : i + 1]


def _check_index(i: int, k: int) -> None:
    if not 0 <= i < k:
        raise IndexError(f"component index {i} out of range for k={k}")


def stats_from_samples_known(samples: Sequence[Sequence[float]]) -> KnownLocStats:
    """Reduce raw observations (location zero) to their sufficient sums."""
    sums, sizes = [], []
    for idx, sample in enumerate(samples):
        x = np.asarray(sample, dtype=float)
        if x.size == 0:
            raise ValueError(f"population {idx} has no observations")
        if np.any(~(x > 0)):
            raise ValueError(f"population {idx} has a non-positive observation")
        sums.append(float(np.sum(x)))
        sizes.append(x.size)
    return KnownLocStats(tuple(sizes), np.array(sums))


def bsee(stats: KnownLocStats, shape: LinexShape) -> np.ndarray:
    """Best scale equivariant estimator ``c_0i * S_i`` (order restriction ignored)."""
    c = np.array([bsee_coefficient(m, shape) for m in stats.n])
    return c * stats.S


def clamp_psi_known(i: int, base_psi, stats: KnownLocStats, shape: LinexShape):
    """Truncate an equivariant multiplier of ``S_i`` to its admissible envelope.

    For the first component the multiplier is clipped to
    ``[d, d * (1 + sum_{j>0} U_j)]``; for later components only the lower
    bound ``d * (1 + sum_{j<i} U_j)`` applies. ``d`` is
    :func:`truncation_coefficient_known` at the total sample size.
    """
    _check_index(i, stats.k)
    d = truncation_coefficient_known(stats.n_total, shape)
    u = stats.ratios(i)
    base = np.asarray(base_psi, dtype=float)
    if i == 0:
        hi = d * (1.0 + u[..., 1:].sum(axis=-1))
        out = np.clip(base, d, hi)
    else:
        lo = d * (1.0 + u[..., :i].sum(axis=-1))
        out = np.maximum(base, lo)
    return float(out) if out.ndim == 0 else out


def _truncate(
    base: np.ndarray, multipliers: np.ndarray, stats: KnownLocStats, shape: LinexShape
) -> np.ndarray:
    clamped = np.stack(
        [clamp_psi_known(i, multipliers[..., i], stats, shape) for i in range(stats.k)],
        axis=-1,
    )
    # untouched components keep the base estimate bit for bit
    return np.where(clamped == multipliers, base, clamped * stats.S)


def improved_bsee(stats: KnownLocStats, shape: LinexShape) -> np.ndarray:
    """BSEE with each multiplier truncated to the envelope; dominates :func:`bsee`."""
    c = np.array([bsee_coefficient(m, shape) for m in stats.n])
    return _truncate(c * stats.S, np.broadcast_to(c, stats.S.shape), stats, shape)


def restricted_mle_known(stats: KnownLocStats) -> np.ndarray:
    """MLE under ``sigma_1 <= ... <= sigma_k``: max-min pooled means of ``S / n``."""
    return max_min_pooled(stats.S, np.array(stats.n, dtype=float))


def improved_restricted_mle_known(stats: KnownLocStats, shape: LinexShape) -> np.ndarray:
    """Restricted MLE with its equivariant multiplier ``RMLE_i / S_i`` truncated."""
    rmle = restricted_mle_known(stats)
    return _truncate(rmle, rmle / stats.S, stats, shape)
