"""Derivation of (estimate, standard error) pairs from raw study summaries.

Covers the common effect scales: plain and standardized mean differences,
log odds ratios from 2x2 tables, log odds from event proportions, log
ratios recovered from a reported confidence interval, and Fisher-z
transformed correlations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import special

from .data import EffectEstimate
from .errors import DomainError

__all__ = [
    "TwoGroupContinuous",
    "TwoByTwoTable",
    "ProportionCount",
    "RatioWithCI",
    "CorrelationCount",
    "mean_difference",
    "smd_hedges_g",
    "log_or",
    "log_odds",
    "log_ratio_from_ci",
    "fisher_z",
    "rescale_estimate",
]


@dataclass(frozen=True)
class TwoGroupContinuous:
    """Group summaries of a two-arm study; group 1 is treatment, 2 control."""

    mean1: float
    sd1: float
    n1: int
    mean2: float
    sd2: float
    n2: int

    def __post_init__(self):
        if not (self.sd1 > 0 and self.sd2 > 0):
            raise DomainError("group standard deviations must be > 0")
        if self.n1 < 2 or self.n2 < 2:
            raise DomainError("group sizes must be >= 2")


@dataclass(frozen=True)
class TwoByTwoTable:
    """Event counts and totals of a two-arm binary-outcome study."""

    events_t: int
    total_t: int
    events_c: int
    total_c: int

    def __post_init__(self):
        for events, total, arm in (
            (self.events_t, self.total_t, "treatment"),
            (self.events_c, self.total_c, "control"),
        ):
            if total < 1 or not 0 <= events <= total:
                raise DomainError(f"invalid counts in {arm} arm: {events}/{total}")


@dataclass(frozen=True)
class ProportionCount:
    events: int
    total: int

    def __post_init__(self):
        if self.total < 1 or not 0 <= self.events <= self.total:
            raise DomainError(f"invalid counts: {self.events}/{self.total}")


@dataclass(frozen=True)
class RatioWithCI:
    """A ratio-type estimate reported as point value with confidence bounds."""

    point: float
    lower: float
    upper: float
    level: float = 0.95

    def __post_init__(self):
        if not (0 < self.lower < self.point < self.upper):
            raise DomainError(
                f"need 0 < lower < point < upper, got [{self.lower}, {self.point}, {self.upper}]"
            )
        if not 0 < self.level < 1:
            raise DomainError("confidence level must lie in (0, 1)")


@dataclass(frozen=True)
class CorrelationCount:
    r: float
    n: int

    def __post_init__(self):
        if not abs(self.r) < 1:
            raise DomainError(f"correlation must lie in (-1, 1), got {self.r}")
        if self.n <= 3:
            raise DomainError(f"need n > 3 observations, got {self.n}")


def mean_difference(g: TwoGroupContinuous, label: str = "") -> EffectEstimate:
    """Raw mean difference (treatment minus control)."""
    y = g.mean1 - g.mean2
    sigma = math.sqrt(g.sd1**2 / g.n1 + g.sd2**2 / g.n2)
    return EffectEstimate(y, sigma, g.n1 + g.n2, label)


def smd_hedges_g(g: TwoGroupContinuous, label: str = "") -> EffectEstimate:
    """Standardized mean difference with small-sample bias correction."""
    n = g.n1 + g.n2
    if n <= 3:
        raise DomainError("standardized difference needs more than 3 subjects in total")
    pooled = math.sqrt(((g.n1 - 1) * g.sd1**2 + (g.n2 - 1) * g.sd2**2) / (n - 2))
    d = (g.mean1 - g.mean2) / pooled
    correction = 1.0 - 3.0 / (4.0 * n - 9.0)
    value = correction * d
    sigma = math.sqrt(n / (g.n1 * g.n2) + value**2 / (2.0 * n))
    return EffectEstimate(value, sigma, n, label)


def log_or(t: TwoByTwoTable, label: str = "", continuity_correction: bool = False) -> EffectEstimate:
    """Log odds ratio of a 2x2 table; zero cells need the correction flag."""
    a, b = float(t.events_t), float(t.total_t - t.events_t)
    c, d = float(t.events_c), float(t.total_c - t.events_c)
    if min(a, b, c, d) == 0:
        if not continuity_correction:
            raise DomainError(
                "zero cell in 2x2 table; pass continuity_correction=True to add "
                "0.5 to all four cells"
            )
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    y = math.log(a * d / (b * c))
    sigma = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    return EffectEstimate(y, sigma, t.total_t + t.total_c, label)


def log_odds(p: ProportionCount, label: str = "", continuity_correction: bool = False) -> EffectEstimate:
    """Log odds of an event proportion; boundary counts need the correction flag."""
    x, rest = float(p.events), float(p.total - p.events)
    if min(x, rest) == 0:
        if not continuity_correction:
            raise DomainError(
                "boundary count (0 or all events); pass continuity_correction=True "
                "to add 0.5 to both cells"
            )
        x, rest = x + 0.5, rest + 0.5
    y = math.log(x / rest)
    sigma = math.sqrt(1 / x + 1 / rest)
    return EffectEstimate(y, sigma, p.total, label)


def log_ratio_from_ci(r: RatioWithCI, label: str = "", n: int | None = None) -> EffectEstimate:
    """Log of a reported ratio, standard error recovered from the CI width."""
    z = special.ndtri((1.0 + r.level) / 2.0)
    sigma = (math.log(r.upper) - math.log(r.lower)) / (2.0 * z)
    return EffectEstimate(math.log(r.point), sigma, n, label)


def fisher_z(c: CorrelationCount, label: str = "") -> EffectEstimate:
    """Variance-stabilizing transform of a correlation coefficient."""
    return EffectEstimate(math.atanh(c.r), 1.0 / math.sqrt(c.n - 3), c.n, label)


def rescale_estimate(est: EffectEstimate, factor: float) -> EffectEstimate:
    """Re-express an estimate for a rescaled regressor increment.

    A slope per new increment of ``factor`` times the old one carries
    ``factor`` times the effect and standard error; any heterogeneity
    prior must be rescaled by the same factor.
    """
    if not factor > 0:
        raise DomainError("rescale factor must be > 0")
    return EffectEstimate(est.y * factor, est.sigma * factor, est.n, est.label)
