"""Linex loss and the closed-form multipliers used by the estimators.

The loss is measured on the relative error ``(estimate - truth) / truth`` with
the scale factor of the general linex family fixed at one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

# Value substituted for a loss whose exponential overflows.
LOSS_CEILING = float(np.finfo(np.float64).max)


class LinexOverflowWarning(RuntimeWarning):
    """Raised (as a warning) when linex loss evaluation saturates."""


@dataclass(frozen=True)
class LinexShape:
    """Asymmetry parameter ``p`` of the linex loss.

    ``p > 0`` penalises over-estimation more heavily, ``p < 0`` under-estimation.
    """

    p: float

    def __post_init__(self) -> None:
        p = float(self.p)
        if not math.isfinite(p) or p == 0.0:
            raise ValueError(f"linex shape must be finite and nonzero, got p={self.p!r}")
        object.__setattr__(self, "p", p)


def linex_loss(shape: LinexShape, estimate, truth):
    """Evaluate ``exp(p*d) - p*d - 1`` with ``d = (estimate - truth) / truth``.

    Works elementwise on arrays. Entries whose exponential overflows are set to
    ``LOSS_CEILING`` and a ``LinexOverflowWarning`` is emitted; callers that need
    a count compare against the ceiling.
    """
    truth = np.asarray(truth, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    if np.any(~(truth > 0)):
        raise ValueError("linex loss needs a strictly positive true value")
    if np.any(~np.isfinite(estimate)) or np.any(estimate < 0):
        raise ValueError("estimate must be finite and nonnegative")

    pd = shape.p * (estimate - truth) / truth
    with np.errstate(over="ignore"):
        loss = np.expm1(pd) - pd
    saturated = ~np.isfinite(loss)
    if np.any(saturated):
        loss = np.where(saturated, LOSS_CEILING, loss)
        warnings.warn(
            f"linex loss saturated for {int(saturated.sum())} value(s)",
            LinexOverflowWarning,
            stacklevel=2,
        )
    # expm1(x) - x is >= 0 mathematically; clip roundoff below zero.
    loss = np.maximum(loss, 0.0)
    if loss.ndim == 0:
        return float(loss)
    return loss


def _multiplier(p: float, m: float) -> float:
    # p^-1 (1 - exp(-p/m)) written via expm1 so it stays accurate as p -> 0
    return -math.expm1(-p / m) / p


def bsee_coefficient(n_i: int, shape: LinexShape) -> float:
    """Multiplier of ``S_i`` in the best scale equivariant estimator."""
    if n_i < 1:
        raise ValueError(f"sample size must be >= 1, got {n_i}")
    return _multiplier(shape.p, n_i + 1)


def baee_coefficient(n_i: int, shape: LinexShape) -> float:
    """Multiplier of ``T_i`` in the best affine equivariant estimator."""
    if n_i < 2:
        raise ValueError(f"unknown-location estimators need n_i >= 2, got {n_i}")
    return _multiplier(shape.p, n_i)


def truncation_coefficient_known(n_total: int, shape: LinexShape) -> float:
    """Base of the clamp envelope when locations are known; ``n_total = sum(n)``."""
    if n_total < 2:
        raise ValueError(f"total sample size must be >= 2, got {n_total}")
    return _multiplier(shape.p, n_total + 1)


def truncation_coefficient_unknown(n_total: int, k: int, shape: LinexShape) -> float:
    """Base of the clamp envelope when locations are unknown."""
    if n_total - k < 1:
        raise ValueError(f"need n_total - k >= 1, got n_total={n_total}, k={k}")
    return _multiplier(shape.p, n_total - k + 1)
