"""Monte Carlo risk of the estimators, an analytic risk oracle and PRRI."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .estimators import EstimatorId, apply_estimator
from .known import KnownLocStats
from .loss import LOSS_CEILING, LinexOverflowWarning, LinexShape, linex_loss
from .rng import uniforms
from .unknown import UnknownLocStats

DEFAULT_REPLICATIONS = 50_000
# Replications per unit of work; fixed so the partition never depends on workers.
CHUNK = 16_384
MAX_ATTEMPTS = 32


class IncompatibleEstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """True parameters, sample sizes and Monte Carlo settings for one risk run."""

    n: tuple[int, ...]
    sigma: tuple[float, ...]
    shape: LinexShape
    mu: tuple[float, ...] | None = None
    replications: int = DEFAULT_REPLICATIONS
    seed: int = 0

    def __post_init__(self) -> None:
        n = tuple(int(v) for v in self.n)
        sigma = tuple(float(v) for v in self.sigma)
        mu = (0.0,) * len(n) if self.mu is None else tuple(float(v) for v in self.mu)
        shape = self.shape if isinstance(self.shape, LinexShape) else LinexShape(self.shape)
        if len(n) < 2:
            raise ValueError(f"need at least two populations, got k={len(n)}")
        if len(sigma) != len(n) or len(mu) != len(n):
            raise ValueError("n, sigma and mu must have the same length")
        if any(v < 1 for v in n):
            raise ValueError(f"sample sizes must be >= 1, got {n}")
        if not all(math.isfinite(s) and s > 0 for s in sigma):
            raise ValueError(f"scales must be finite and > 0, got {sigma}")
        if not all(math.isfinite(m) for m in mu):
            raise ValueError(f"locations must be finite, got {mu}")
        if any(a > b for a, b in zip(sigma, sigma[1:])):
            raise ValueError(f"scales must satisfy sigma_1 <= ... <= sigma_k, got {sigma}")
        if int(self.replications) < 1:
            raise ValueError("replications must be >= 1")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "replications", int(self.replications))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def k(self) -> int:
        return len(self.n)


@dataclass(frozen=True)
class RiskEstimate:
    """Mean loss per component with its standard error.

    ``losses`` keeps the per-replication values (shape ``(replications, k)``)
    so that paired comparisons between estimators run on the same draws can use
    the correlation between them.
    """

    mean_loss: np.ndarray
    std_error: np.ndarray
    replications: int
    overflow_count: int = 0
    redraw_count: int = 0
    losses: np.ndarray | None = field(default=None, repr=False, compare=False)

    @classmethod
    def from_losses(cls, losses: np.ndarray, redraw_count: int = 0) -> "RiskEstimate":
        losses = np.asarray(losses, dtype=float)
        r = losses.shape[0]
        mean = losses.mean(axis=0)
        if r > 1:
            se = losses.std(axis=0, ddof=1) / math.sqrt(r)
        else:
            se = np.full(losses.shape[1], np.nan)
        return cls(
            mean_loss=mean,
            std_error=se,
            replications=r,
            overflow_count=int(np.sum(losses == LOSS_CEILING)),
            redraw_count=int(redraw_count),
            losses=losses,
        )


def exponential_from_uniform(u) -> np.ndarray:
    """Inverse-transform standard exponential draws from uniforms on [0, 1)."""
    return -np.log1p(-np.asarray(u, dtype=float))


def sample_population(mu: float, sigma: float, n: int, stream) -> np.ndarray:
    """``n`` i.i.d. draws ``mu + sigma * E``, ``E`` standard exponential.

    ``stream`` is anything with a ``random(size)`` method returning uniforms on
    [0, 1): a :class:`ordscale.rng.Substream` or a ``numpy.random.Generator``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return mu + sigma * exponential_from_uniform(stream.random(n))


def _draw_samples(scenario: Scenario, reps: np.ndarray, attempt: int) -> list[np.ndarray]:
    width = sum(scenario.n)
    e = exponential_from_uniform(uniforms(scenario.seed, reps, attempt * width, width))
    out, offset = [], 0
    for m, mu, s in zip(scenario.n, scenario.mu, scenario.sigma):
        out.append(mu + s * e[:, offset : offset + m])
        offset += m
    return out


def _statistics(scenario: Scenario, samples: list[np.ndarray], need_known: bool, need_unknown: bool):
    known_sums = unknown_min = unknown_resid = None
    bad = np.zeros(samples[0].shape[0], dtype=bool)
    if need_known:
        known_sums = np.stack([np.sum(x - mu, axis=1) for x, mu in zip(samples, scenario.mu)], axis=1)
        bad |= np.any(~(known_sums > 0), axis=1)
    if need_unknown:
        unknown_min = np.stack([x.min(axis=1) for x in samples], axis=1)
        unknown_resid = np.stack(
            [np.sum(x - x.min(axis=1, keepdims=True), axis=1) for x in samples], axis=1
        )
        bad |= np.any(unknown_resid == 0, axis=1)
    return known_sums, unknown_min, unknown_resid, bad


def _chunk_losses(
    estimators: Sequence[EstimatorId], scenario: Scenario, reps: np.ndarray
) -> tuple[dict[EstimatorId, np.ndarray], int]:
    need_known = any(e.known_location for e in estimators)
    need_unknown = any(not e.known_location for e in estimators)
    k = scenario.k
    sums = np.empty((reps.size, k))
    mins = np.empty((reps.size, k))
    resid = np.empty((reps.size, k))
    pending = np.arange(reps.size)
    redraws = 0
    for attempt in range(MAX_ATTEMPTS):
        samples = _draw_samples(scenario, reps[pending], attempt)
        s, m, t, bad = _statistics(scenario, samples, need_known, need_unknown)
        ok = pending[~bad]
        if need_known:
            sums[ok] = s[~bad]
        if need_unknown:
            mins[ok] = m[~bad]
            resid[ok] = t[~bad]
        pending = pending[bad]
        if pending.size == 0:
            break
        redraws += pending.size
    else:
        raise RuntimeError(f"{pending.size} replication(s) stayed degenerate after {MAX_ATTEMPTS} draws")

    stats_known = KnownLocStats(scenario.n, sums) if need_known else None
    stats_unknown = UnknownLocStats(scenario.n, mins, resid) if need_unknown else None
    truth = np.array(scenario.sigma)
    out = {}
    for est in estimators:
        stats = stats_known if est.known_location else stats_unknown
        values = apply_estimator(est, stats, scenario.shape)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", LinexOverflowWarning)
            out[est] = linex_loss(scenario.shape, values, truth)
    return out, redraws


def _check_compatible(estimators: Sequence[EstimatorId], scenario: Scenario) -> None:
    for est in estimators:
        if not est.known_location and min(scenario.n) < 2:
            raise IncompatibleEstimatorError(
                f"{est} needs every n_i >= 2, scenario has n={scenario.n}"
            )


def estimate_risks(
    estimators: Iterable[EstimatorId | str], scenario: Scenario, workers: int = 1
) -> dict[EstimatorId, RiskEstimate]:
    """Monte Carlo risk of several estimators on shared draws.

    Replication ``r`` always reads the same stream positions, so estimators
    evaluated together (or separately with the same seed) see identical data,
    and the result is bit-identical for any ``workers``.
    """
    ests = list(dict.fromkeys(EstimatorId(e) for e in estimators))
    if not ests:
        raise ValueError("no estimators given")
    _check_compatible(ests, scenario)

    bounds = [
        (a, min(a + CHUNK, scenario.replications))
        for a in range(0, scenario.replications, CHUNK)
    ]

    def work(bound):
        return _chunk_losses(ests, scenario, np.arange(bound[0], bound[1], dtype=np.uint64))

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]

    redraws = sum(p[1] for p in parts)
    return {
        est: RiskEstimate.from_losses(np.concatenate([p[0][est] for p in parts]), redraws)
        for est in ests
    }


def estimate_risk(estimator: EstimatorId | str, scenario: Scenario, workers: int = 1) -> RiskEstimate:
    """Monte Carlo risk of one estimator under ``scenario``."""
    est = EstimatorId(estimator)
    return estimate_risks([est], scenario, workers=workers)[est]


def closed_form_bsee_risk(n: int, shape: LinexShape, c: float) -> float:
    """Exact linex risk of ``c * S`` when ``S / sigma ~ Gamma(n, 1)``.

    Uses the gamma moment generating function; returns ``math.inf`` when
    ``p * c >= 1`` because the expectation diverges there.
    """
    p = shape.p
    pc = p * c
    if pc >= 1:
        return math.inf
    return math.exp(-p) * (1.0 - pc) ** (-n) - pc * n + p - 1.0


def prri(risk_new: RiskEstimate, risk_base: RiskEstimate) -> np.ndarray:
    """Percentage relative risk improvement of ``risk_new`` over ``risk_base``."""
    base = np.asarray(risk_base.mean_loss, dtype=float)
    new = np.asarray(risk_new.mean_loss, dtype=float)
    if base.shape != new.shape:
        raise ValueError("risk estimates have different numbers of components")
    if np.any(base == 0):
        raise ZeroDivisionError("PRRI is undefined when the base risk is zero")
    return 100.0 * (base - new) / base


def prri_std_error(risk_new: RiskEstimate, risk_base: RiskEstimate) -> np.ndarray:
    """Delta-method standard error of :func:`prri`.

    Uses the paired per-replication losses when both estimates carry them on
    the same draws; otherwise treats the two estimates as independent.
    """
    mb = np.asarray(risk_base.mean_loss, dtype=float)
    mn = np.asarray(risk_new.mean_loss, dtype=float)
    if np.any(mb == 0):
        raise ZeroDivisionError("PRRI is undefined when the base risk is zero")
    ratio = mn / mb
    ln, lb = risk_new.losses, risk_base.losses
    if ln is not None and lb is not None and ln.shape == lb.shape and ln.shape[0] > 1:
        resid = ln - ratio * lb
        var = resid.var(axis=0, ddof=1) / ln.shape[0]
        return 100.0 * np.sqrt(var) / mb
    sn = np.asarray(risk_new.std_error, dtype=float)
    sb = np.asarray(risk_base.std_error, dtype=float)
    return 100.0 * np.sqrt((sn / mb) ** 2 + (ratio * sb / mb) ** 2)
