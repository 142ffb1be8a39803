"""Identifiers for the eight estimator families and a uniform call interface."""

from __future__ import annotations

from enum import Enum

import numpy as np

from . import known, unknown
from .loss import LinexShape


class EstimatorId(str, Enum):
    BSEE = "bsee"
    IMPROVED_BSEE = "improved-bsee"
    RMLE_KNOWN = "rmle-known"
    IMPROVED_RMLE_KNOWN = "improved-rmle-known"
    BAEE = "baee"
    IMPROVED_BAEE = "improved-baee"
    RMLE_UNKNOWN = "rmle-unknown"
    IMPROVED_RMLE_UNKNOWN = "improved-rmle-unknown"

    @property
    def known_location(self) -> bool:
        return self in _KNOWN

    def __str__(self) -> str:
        return self.value


_KNOWN = {
    EstimatorId.BSEE: lambda st, sh: known.bsee(st, sh),
    EstimatorId.IMPROVED_BSEE: lambda st, sh: known.improved_bsee(st, sh),
    EstimatorId.RMLE_KNOWN: lambda st, sh: known.restricted_mle_known(st),
    EstimatorId.IMPROVED_RMLE_KNOWN: lambda st, sh: known.improved_restricted_mle_known(st, sh),
}
_UNKNOWN = {
    EstimatorId.BAEE: lambda st, sh: unknown.baee(st, sh),
    EstimatorId.IMPROVED_BAEE: lambda st, sh: unknown.improved_baee(st, sh),
    EstimatorId.RMLE_UNKNOWN: lambda st, sh: unknown.restricted_mle_unknown(st),
    EstimatorId.IMPROVED_RMLE_UNKNOWN: lambda st, sh: unknown.improved_restricted_mle_unknown(st, sh),
}


def apply_estimator(estimator: EstimatorId, stats, shape: LinexShape) -> np.ndarray:
    """Run ``estimator`` on matching sufficient statistics."""
    estimator = EstimatorId(estimator)
    if estimator.known_location:
        if not isinstance(stats, known.KnownLocStats):
            raise TypeError(f"{estimator} needs KnownLocStats, got {type(stats).__name__}")
        return _KNOWN[estimator](stats, shape)
    if not isinstance(stats, unknown.UnknownLocStats):
        raise TypeError(f"{estimator} needs UnknownLocStats, got {type(stats).__name__}")
    return _UNKNOWN[estimator](stats, shape)
