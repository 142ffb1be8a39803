"""Estimation of ordered exponential scale parameters under linex loss."""

from .estimators import EstimatorId, apply_estimator
from .known import (
    KnownLocStats,
    bsee,
    clamp_psi_known,
    improved_bsee,
    improved_restricted_mle_known,
    restricted_mle_known,
    stats_from_samples_known,
)
from .loss import (
    LinexOverflowWarning,
    LinexShape,
    baee_coefficient,
    bsee_coefficient,
    linex_loss,
    truncation_coefficient_known,
    truncation_coefficient_unknown,
)
from .risk import (
    RiskEstimate,
    Scenario,
    closed_form_bsee_risk,
    estimate_risk,
    estimate_risks,
    prri,
    prri_std_error,
    sample_population,
)
from .unknown import (
    DegenerateStatisticError,
    UnknownLocStats,
    baee,
    clamp_phi_unknown,
    improved_baee,
    improved_restricted_mle_unknown,
    restricted_mle_unknown,
    stats_from_samples_unknown,
)

__version__ = "0.1.0"
