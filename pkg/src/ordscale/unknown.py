"""Estimators of ordered scales when the locations are unknown.

The sufficient statistic is the pair (sample minimum, residual sum ``T_i``).
Only ``T`` enters the scale estimators, so all of them are invariant to
per-population shifts of the raw data. Batch dimensions work as in
:mod:`ordscale.known`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .loss import LinexShape, baee_coefficient, truncation_coefficient_unknown
from .pooling import max_min_pooled


class DegenerateStatisticError(ValueError):
    """A residual sum is zero, i.e. every observation in a population is equal."""


@dataclass(frozen=True)
class UnknownLocStats:
    """Sample sizes, sample minima ``xmin`` and residual sums ``T``.

    ``T_i = 0`` is accepted at construction (it is observable from real data)
    but rejected by every estimator.
    """

    n: tuple[int, ...]
    xmin: np.ndarray
    T: np.ndarray

    def __post_init__(self) -> None:
        n = tuple(int(v) for v in self.n)
        xmin = np.array(self.xmin, dtype=float)
        T = np.array(self.T, dtype=float)
        if len(n) < 2:
            raise ValueError(f"need at least two populations, got k={len(n)}")
        if any(v < 2 for v in n):
            raise ValueError(f"every population needs n_i >= 2, got {n}")
        if T.ndim == 0 or T.shape[-1] != len(n):
            raise ValueError(f"T must have trailing length {len(n)}, got shape {T.shape}")
        if xmin.shape != T.shape:
            raise ValueError(f"xmin shape {xmin.shape} does not match T shape {T.shape}")
        if not (np.all(np.isfinite(T)) and np.all(np.isfinite(xmin))):
            raise ValueError("statistics must be finite")
        if np.any(T < 0):
            raise ValueError("residual sums must be >= 0")
        xmin.flags.writeable = False
        T.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "xmin", xmin)
        object.__setattr__(self, "T", T)

    @property
    def k(self) -> int:
        return len(self.n)

    @property
    def n_total(self) -> int:
        return sum(self.n)

    @property
    def degenerate(self) -> np.ndarray:
        """Mask over the batch: True where some ``T_i`` is zero."""
        return np.any(self.T == 0, axis=-1)

    def ratios(self, i: int) -> np.ndarray:
        """``V_j = T_j / T_i`` for every ``j`` (entry ``i`` is 1)."""
        _check_index(i, self.k)
        _require_positive(self)
        return self.T / self.T[..., i : i + 1]


def _check_index(i: int, k: int) -> None:
    if not 0 <= i < k:
        raise IndexError(f"component index {i} out of range for k={k}")


def _require_positive(stats: UnknownLocStats) -> None:
    if np.any(stats.degenerate):
        raise DegenerateStatisticError("a residual sum T_i is zero; scale is not estimable")


def stats_from_samples_unknown(samples: Sequence[Sequence[float]]) -> UnknownLocStats:
    """Compute sample minima and residual sums for each population."""
    sizes, mins, resid = [], [], []
    for idx, sample in enumerate(samples):
        x = np.asarray(sample, dtype=float)
        if x.size < 2:
            raise ValueError(f"population {idx} needs at least 2 observations, got {x.size}")
        lo = float(np.min(x))
        sizes.append(x.size)
        mins.append(lo)
        resid.append(float(np.sum(x - lo)))
    return UnknownLocStats(tuple(sizes), np.array(mins), np.array(resid))


def baee(stats: UnknownLocStats, shape: LinexShape) -> np.ndarray:
    """Best affine equivariant estimator ``d_0i * T_i``."""
    _require_positive(stats)
    d = np.array([baee_coefficient(m, shape) for m in stats.n])
    return d * stats.T


def clamp_phi_unknown(i: int, base_phi, stats: UnknownLocStats, shape: LinexShape):
    """Truncate an equivariant multiplier of ``T_i`` to its admissible envelope.

    Same shape of rule as :func:`ordscale.known.clamp_psi_known` with ratios
    ``V_j = T_j / T_i`` and base :func:`truncation_coefficient_unknown`.
    """
    _check_index(i, stats.k)
    e = truncation_coefficient_unknown(stats.n_total, stats.k, shape)
    v = stats.ratios(i)
    base = np.asarray(base_phi, dtype=float)
    if i == 0:
        out = np.clip(base, e, e * (1.0 + v[..., 1:].sum(axis=-1)))
    else:
        out = np.maximum(base, e * (1.0 + v[..., :i].sum(axis=-1)))
    return float(out) if out.ndim == 0 else out


def _truncate(
    base: np.ndarray, multipliers: np.ndarray, stats: UnknownLocStats, shape: LinexShape
) -> np.ndarray:
    clamped = np.stack(
        [clamp_phi_unknown(i, multipliers[..., i], stats, shape) for i in range(stats.k)],
        axis=-1,
    )
    return np.where(clamped == multipliers, base, clamped * stats.T)


def improved_baee(stats: UnknownLocStats, shape: LinexShape) -> np.ndarray:
    """BAEE with truncated multipliers; dominates :func:`baee`."""
    _require_positive(stats)
    d = np.array([baee_coefficient(m, shape) for m in stats.n])
    return _truncate(d * stats.T, np.broadcast_to(d, stats.T.shape), stats, shape)


def restricted_mle_unknown(stats: UnknownLocStats) -> np.ndarray:
    """MLE under ``sigma_1 <= ... <= sigma_k``: max-min pooled means of ``T / n``."""
    _require_positive(stats)
    return max_min_pooled(stats.T, np.array(stats.n, dtype=float))


def improved_restricted_mle_unknown(stats: UnknownLocStats, shape: LinexShape) -> np.ndarray:
    """Restricted MLE with its multiplier ``RMLE_i / T_i`` truncated."""
    rmle = restricted_mle_unknown(stats)
    return _truncate(rmle, rmle / stats.T, stats, shape)
