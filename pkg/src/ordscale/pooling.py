"""Max-min pooled means for a nondecreasing order restriction.

For totals ``x_j`` with weights ``w_j`` the restricted estimate of component
``i`` is ``max_{s<=i} min_{t>=i} sum(x[s..t]) / sum(w[s..t])``, which is the
weighted isotonic regression of ``x_j / w_j``.
"""

from __future__ import annotations

import numpy as np


def max_min_pooled(totals, weights) -> np.ndarray:
    """Evaluate the max-min window formula along the last axis.

    ``totals`` has shape ``(..., k)``; ``weights`` broadcasts against it. Window
    sums are accumulated left to right from each start ``s`` so no prefix-sum
    differencing is involved. Cost is O(k^2) per instance, fine for the small
    ``k`` this is used with.
    """
    x = np.asarray(totals, dtype=float)
    w = np.broadcast_to(np.asarray(weights, dtype=float), x.shape)
    k = x.shape[-1]
    if k == 0:
        raise ValueError("need at least one component")

    out = np.full(x.shape, -np.inf)
    for s in range(k):
        # pooled[..., t - s] = mean over window [s, t]
        pooled = np.cumsum(x[..., s:], axis=-1) / np.cumsum(w[..., s:], axis=-1)
        # min over t >= i for every i >= s
        suffix_min = np.minimum.accumulate(pooled[..., ::-1], axis=-1)[..., ::-1]
        np.maximum(out[..., s:], suffix_min, out=out[..., s:])
    return out
