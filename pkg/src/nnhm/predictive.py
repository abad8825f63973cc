"""Prior implications: what a heterogeneity value or prior means for effects.

Conditional on tau, a study effect differs from the overall mean by a
N(0, tau^2) deviate; marginalizing tau over its prior yields a normal
scale mixture.  These helpers quantify both views, translate tau ranges
into category probabilities, and carry a small catalog of commonly used
priors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special

from .errors import DomainError, ImproperPriorError, PriorSpecError
from .priors import HalfNormal, LogNormal, LogStudentT, TauPrior

__all__ = [
    "CategoryScheme",
    "CategoryBreakdown",
    "PredictiveSummary",
    "DEFAULT_CATEGORIES",
    "NormalScaleMixture",
    "conditional_predictive",
    "random_pair_median",
    "marginal_predictive",
    "category_probabilities",
    "preset",
    "preset_names",
    "sample_predictive",
    "sample_conditional",
]

_MEDIAN_ABS_Z = special.ndtri(0.75)


@dataclass(frozen=True)
class CategoryScheme:
    """Named, ascending and non-overlapping heterogeneity ranges."""

    categories: tuple[tuple[str, float, float], ...]

    def __post_init__(self):
        prev_hi = 0.0
        for name, lo, hi in self.categories:
            if not lo < hi:
                raise DomainError(f"category {name!r} has empty range [{lo}, {hi}]")
            if lo < prev_hi:
                raise DomainError(f"category {name!r} overlaps its predecessor")
            prev_hi = hi


# tau ranges conventionally used for log-OR-type effects
DEFAULT_CATEGORIES = CategoryScheme(
    (
        ("reasonable", 0.1, 0.5),
        ("fairly high", 0.5, 1.0),
        ("fairly extreme", 1.0, math.inf),
    )
)


@dataclass(frozen=True)
class CategoryBreakdown:
    below: float
    categories: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class PredictiveSummary:
    """Symmetric predictive interval for theta_i - mu, raw and exponentiated."""

    interval_lo: float
    interval_hi: float
    level: float

    @property
    def exp_lo(self) -> float:
        return math.exp(self.interval_lo)

    @property
    def exp_hi(self) -> float:
        return math.exp(self.interval_hi)


def conditional_predictive(tau: float, level: float = 0.95) -> PredictiveSummary:
    """Predictive range of effects around the mean for a fixed heterogeneity."""
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    z = special.ndtri((1.0 + level) / 2.0)
    return PredictiveSummary(-z * tau, z * tau, level)


def random_pair_median(tau: float) -> tuple[float, float]:
    """Median absolute difference of two random effects, raw and exponentiated.

    The difference of two independent N(0, tau^2) deviates is
    N(0, 2 tau^2), so the median absolute difference is sqrt(2) times
    tau times the 75% normal quantile.
    """
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    raw = math.sqrt(2.0) * tau * _MEDIAN_ABS_Z
    return raw, math.exp(raw)


@lru_cache(maxsize=8)
def _gauss_legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


class NormalScaleMixture:
    """Marginal law of theta_i - mu when tau follows a proper prior.

    The CDF integral over tau uses Gauss-Legendre panels between prior
    quantiles: equal-probability panels below the median and dyadically
    shrinking tail panels above it, which keeps heavy-tailed priors
    accurate without an excessive node count.
    """

    def __init__(self, prior: TauPrior, tail: float = 1e-9, panel_nodes: int = 32):
        if not prior.is_proper:
            raise ImproperPriorError("marginal predictive needs a proper heterogeneity prior")
        self.prior = prior
        probs = [i / 24.0 for i in range(13)]  # 12 panels up to the median
        j = 1
        while 2.0**-j > tail:
            probs.append(1.0 - 2.0**-j)
            j += 1
        probs.append(1.0 - tail)
        edges = np.asarray(prior.ppf(np.asarray(probs)))
        base_x, base_w = _gauss_legendre(panel_nodes)
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            if not b > a:
                continue
            half = 0.5 * (b - a)
            x = a + half * (base_x + 1.0)
            nodes.append(x)
            weights.append(half * base_w * prior.pdf(x))
        self.nodes = np.concatenate(nodes)
        w = np.concatenate(weights)
        self.weights = w / w.sum()

    def cdf(self, x: float) -> float:
        return float(self.weights @ special.ndtr(x / self.nodes))

    def quantile(self, p: float) -> float:
        if not 0 < p < 1:
            raise DomainError("p must lie in (0, 1)")
        if p == 0.5:
            return 0.0
        if p < 0.5:
            return -self.quantile(1.0 - p)
        hi = float(self.prior.ppf(0.75)) + 1.0
        while self.cdf(hi) < p:
            hi *= 4.0
        return float(optimize.brentq(lambda t: self.cdf(t) - p, 0.0, hi, xtol=1e-13, rtol=1e-15))


def marginal_predictive(prior: TauPrior, level: float = 0.95) -> PredictiveSummary:
    """Predictive range of effects after integrating tau over its prior."""
    if not 0 < level < 1:
        raise DomainError("level must lie in (0, 1)")
    mixture = NormalScaleMixture(prior)
    hi = mixture.quantile((1.0 + level) / 2.0)
    return PredictiveSummary(-hi, hi, level)


def category_probabilities(
    prior: TauPrior, scheme: CategoryScheme = DEFAULT_CATEGORIES
) -> CategoryBreakdown:
    """Prior probability of each heterogeneity category, plus the mass below."""
    if not prior.is_proper:
        raise ImproperPriorError("category probabilities need a proper prior")
    first_lo = scheme.categories[0][1]
    below = float(prior.cdf(first_lo)) if first_lo > 0 else 0.0
    probs = tuple(
        (name, prior.interval_probability(lo, hi)) for name, lo, hi in scheme.categories
    )
    return CategoryBreakdown(below, probs)


_PRESETS: dict[str, TauPrior] = {
    # empirically derived predictive distributions for general healthcare settings
    "turner-logor-general": LogNormal(-1.28, 0.87),
    "rhodes-smd-general": LogStudentT(-1.72, 1.295, 5),
    # conventional half-normal scales
    "hn01": HalfNormal(0.1),
    "hn02": HalfNormal(0.2),
    "hn025": HalfNormal(0.25),
    "hn05": HalfNormal(0.5),
    "hn10": HalfNormal(1.0),
    "hn20": HalfNormal(2.0),
    # published single-analysis proposals
    "prevost-logrr": HalfNormal(0.18),
    "dias-logor": HalfNormal(0.32),
}


def preset(name: str) -> TauPrior:
    """Look up a cataloged prior by name."""
    try:
        return _PRESETS[name.strip().lower()]
    except KeyError:
        raise PriorSpecError(
            f"unknown preset {name!r}; available: {', '.join(sorted(_PRESETS))}"
        ) from None


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def sample_predictive(prior: TauPrior, count: int, seed: int) -> np.ndarray:
    """Monte Carlo draws of theta_i - mu: sample tau, then a normal given tau."""
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    tau = prior.sample(count, rng)
    return tau * rng.standard_normal(count)


def sample_conditional(tau: float, count: int, seed: int) -> np.ndarray:
    """Monte Carlo draws of theta_i - mu for a fixed heterogeneity."""
    if tau < 0:
        raise DomainError("tau must be nonnegative")
    if count < 1:
        raise DomainError("count must be >= 1")
    rng = np.random.default_rng(seed)
    return tau * rng.standard_normal(count)
