"""Unit information standard deviation (UISD) estimators.

The UISD is the per-observation standard deviation implied by standard
errors that scale as sigma_i = uisd / sqrt(n_i).  Relating the
heterogeneity to it converts prior beliefs about between-study spread
into bounds on how many subjects an external meta-analysis can at most
contribute to a single study.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import Dataset
from .errors import DataError, DomainError

__all__ = [
    "UisdEstimate",
    "empirical_uisd",
    "per_study_uisd",
    "theoretical_uisd",
    "prior_max_sample_size",
    "effective_sample_size",
]


@dataclass(frozen=True)
class UisdEstimate:
    value: float
    basis: str  # "per-subject" or "per-event"
    source: str  # "empirical" or "theoretical"

    def __post_init__(self):
        if not self.value > 0:
            raise DomainError("UISD must be > 0")


def _pairs(studies) -> list[tuple[float, float]]:
    if isinstance(studies, Dataset):
        sizes = studies.sample_sizes()
        return list(zip(sizes, studies.sigma))
    pairs = [(float(n), float(s)) for n, s in studies]
    if not pairs:
        raise DataError("need at least one study")
    return pairs


def empirical_uisd(studies) -> UisdEstimate:
    """Pooled estimate sqrt(sum n_i / sum sigma_i^-2).

    Equals the root of mean sample size times the harmonic mean of the
    squared standard errors, so a common-effect pooled variance of
    (sum sigma_i^-2)^-1 corresponds exactly to value^2 / sum(n_i).
    """
    pairs = _pairs(studies)
    for n, s in pairs:
        if n < 1:
            raise DomainError(f"sample sizes must be >= 1, got {n}")
        if not s > 0:
            raise DomainError(f"standard errors must be > 0, got {s}")
    total_n = sum(n for n, _ in pairs)
    total_precision = sum(s**-2 for _, s in pairs)
    return UisdEstimate(math.sqrt(total_n / total_precision), "per-subject", "empirical")


def per_study_uisd(n: float, sigma: float) -> float:
    """Single-study inversion sqrt(n) * sigma."""
    if n < 1 or not sigma > 0:
        raise DomainError("need n >= 1 and sigma > 0")
    return math.sqrt(n) * sigma


def theoretical_uisd(measure: str, p: float | None = None, rate: float | None = None) -> UisdEstimate:
    """Closed-form UISD for a given effect scale.

    ``smd`` -> 2 per subject; ``log-odds`` (requires ``p``) ->
    sqrt(1/p + 1/(1-p)) per subject; ``log-or`` -> 4 per subject;
    ``log-irr`` -> 2 per event, or 2/sqrt(rate) per subject when the
    per-subject event rate is given.
    """
    measure = measure.lower()
    if measure == "smd":
        return UisdEstimate(2.0, "per-subject", "theoretical")
    if measure == "log-odds":
        if p is None:
            raise DomainError("log-odds UISD requires the event probability p")
        if not 0 < p < 1:
            raise DomainError(f"p must lie in (0, 1), got {p}")
        return UisdEstimate(math.sqrt(1.0 / p + 1.0 / (1.0 - p)), "per-subject", "theoretical")
    if measure == "log-or":
        return UisdEstimate(4.0, "per-subject", "theoretical")
    if measure == "log-irr":
        if rate is None:
            return UisdEstimate(2.0, "per-event", "theoretical")
        if not rate > 0:
            raise DomainError(f"event rate must be > 0, got {rate}")
        return UisdEstimate(2.0 / math.sqrt(rate), "per-subject", "theoretical")
    raise DomainError(f"no theoretical UISD for measure {measure!r}")


def prior_max_sample_size(tau: float, uisd: float) -> float:
    """Most subjects an infinite external meta-analysis can contribute, (uisd/tau)^2."""
    if tau < 0 or not uisd > 0:
        raise DomainError("need tau >= 0 and uisd > 0")
    if tau == 0:
        return math.inf
    return (uisd / tau) ** 2


def effective_sample_size(sd: float, uisd: float) -> float:
    """Sample size whose mean has standard error ``sd``: (uisd/sd)^2."""
    if not (sd > 0 and uisd > 0):
        raise DomainError("need sd > 0 and uisd > 0")
    return (uisd / sd) ** 2
