"""Posterior inference for the normal-normal hierarchical model.

Given study estimates y_i with known standard errors sigma_i, the model
is y_i | mu, tau ~ N(mu, sigma_i^2 + tau^2).  The heterogeneity tau gets
a marginal posterior on an adaptive grid; conditional on each grid node
the overall mean, every study-specific mean and a new-study prediction
are normal, so their marginals are normal mixtures over the node masses.
All summaries (median, shortest or central credible intervals) derive
from those mixtures.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .data import Dataset, EffectEstimate
from .errors import DomainError, ImproperPosteriorError, PriorSpecError
from .priors import ImproperUniform, Jeffreys, TauPrior
from .uisd import UisdEstimate, empirical_uisd

__all__ = [
    "EffectPrior",
    "GridPosterior",
    "Summary",
    "AnalysisReport",
    "tau_marginal_posterior",
    "summarize_tau",
    "mu_marginal_posterior",
    "shrinkage_posterior",
    "prediction_posterior",
    "report_from_grid",
    "analyze",
    "parse_effect_prior",
]

DEFAULT_GRID_NODES = 800
_TAIL_MASS = 1e-8


@dataclass(frozen=True)
class EffectPrior:
    """Prior for the overall mean: improper uniform, or normal(mean, sd)."""

    mean: float | None = None
    sd: float | None = None

    def __post_init__(self):
        if (self.mean is None) != (self.sd is None):
            raise DomainError("normal effect prior needs both mean and sd")
        if self.sd is not None and not self.sd > 0:
            raise DomainError("effect prior sd must be > 0")

    @property
    def is_proper(self) -> bool:
        return self.mean is not None

    @staticmethod
    def improper_uniform() -> "EffectPrior":
        return EffectPrior()

    @staticmethod
    def normal(mean: float, sd: float) -> "EffectPrior":
        return EffectPrior(mean, sd)

    def spec(self) -> str:
        if self.is_proper:
            return f"normal({self.mean:g},{self.sd:g})"
        return "uniform()"


def parse_effect_prior(text: str) -> EffectPrior:
    """Parse ``uniform()`` or ``normal(mean, sd)``."""
    compact = re.sub(r"\s+", "", text).lower()
    if compact in ("uniform()", "uniform"):
        return EffectPrior.improper_uniform()
    m = re.match(r"^normal\(([^,]+),([^,]+)\)$", compact)
    if m is None:
        raise PriorSpecError(f"cannot parse effect prior {text!r}")
    try:
        return EffectPrior.normal(float(m.group(1)), float(m.group(2)))
    except ValueError:
        raise PriorSpecError(f"bad numeric value in {text!r}") from None


@dataclass(frozen=True)
class Summary:
    """Posterior median and credible interval of one parameter."""

    median: float
    lo: float
    hi: float
    level: float = 0.95
    kind: str = "shortest"
    sd: float | None = None

    @property
    def width(self) -> float:
        return self.hi - self.lo


class GridPosterior:
    """Heterogeneity posterior on a grid, with per-node conditional moments.

    Immutable after construction; all evaluation methods are pure, so an
    instance may be shared freely across threads.
    """

    def __init__(self, tau, density, cond_mean, cond_sd, log_marginal, data, prior, eprior):
        self.tau = np.asarray(tau)
        self.post_density = np.asarray(density)
        self.cond_mu_mean = np.asarray(cond_mean)
        self.cond_mu_sd = np.asarray(cond_sd)
        self.log_marginal_terms = np.asarray(log_marginal)
        self.data = data
        self.prior = prior
        self.eprior = eprior

        steps = np.diff(self.tau)
        increments = 0.5 * steps * (self.post_density[:-1] + self.post_density[1:])
        cdf = np.concatenate([[0.0], np.cumsum(increments)])
        total = cdf[-1]
        self.post_density = self.post_density / total
        self.post_cdf = cdf / total
        # per-node trapezoid masses back the normal-mixture summaries
        mass = np.zeros_like(self.tau)
        mass[:-1] += 0.5 * steps * self.post_density[:-1]
        mass[1:] += 0.5 * steps * self.post_density[1:]
        self.node_mass = mass / mass.sum()

    # -- heterogeneity ------------------------------------------------------

    def tau_cdf(self, x: float) -> float:
        return float(np.interp(x, self.tau, self.post_cdf))

    def tau_quantile(self, p: float) -> float:
        return float(np.interp(p, self.post_cdf, self.tau))

    def tau_density(self, x: float) -> float:
        return float(np.interp(x, self.tau, self.post_density, right=0.0))

    def map_tau(self) -> float:
        """Grid argmax with a quadratic refinement step."""
        j = int(np.argmax(self.post_density))
        if j == 0 or j == len(self.tau) - 1:
            return float(self.tau[j])
        x0, x1, x2 = self.tau[j - 1 : j + 2]
        y0, y1, y2 = self.post_density[j - 1 : j + 2]
        num = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
        den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
        if den == 0:
            return float(x1)
        vertex = x1 - 0.5 * num / den
        if not x0 <= vertex <= x2:
            return float(x1)
        return float(vertex)

    # -- conditional laws per node ------------------------------------------

    def _shrinkage_moments(self, i: int):
        study = self.data.studies[i]
        tau2 = self.tau**2
        b = tau2 / (study.sigma**2 + tau2)
        mean = b * study.y + (1.0 - b) * self.cond_mu_mean
        var = b * study.sigma**2 + (1.0 - b) ** 2 * self.cond_mu_sd**2
        return mean, np.sqrt(var)

    def _prediction_moments(self):
        return self.cond_mu_mean, np.sqrt(self.cond_mu_sd**2 + self.tau**2)

    # -- normal mixtures over the grid ---------------------------------------

    def _mixture_cdf(self, t: float, means, sds) -> float:
        return float(self.node_mass @ special.ndtr((t - means) / sds))

    def _mixture_quantile(self, p: float, means, sds) -> float:
        lo = float(np.min(means - 12.0 * sds))
        hi = float(np.max(means + 12.0 * sds))
        while self._mixture_cdf(lo, means, sds) > p:
            lo -= hi - lo
        while self._mixture_cdf(hi, means, sds) < p:
            hi += hi - lo
        return float(optimize.brentq(lambda t: self._mixture_cdf(t, means, sds) - p, lo, hi, xtol=1e-12, rtol=1e-14))

    def _mixture_sd(self, means, sds) -> float:
        mean = float(self.node_mass @ means)
        var = float(self.node_mass @ (sds**2 + (means - mean) ** 2))
        return math.sqrt(var)

    def mu_cdf(self, t: float) -> float:
        return self._mixture_cdf(t, self.cond_mu_mean, self.cond_mu_sd)

    def mu_quantile(self, p: float) -> float:
        return self._mixture_quantile(p, self.cond_mu_mean, self.cond_mu_sd)

    def shrinkage_cdf(self, i: int, t: float) -> float:
        means, sds = self._shrinkage_moments(i)
        return self._mixture_cdf(t, means, sds)

    def prediction_cdf(self, t: float) -> float:
        means, sds = self._prediction_moments()
        return self._mixture_cdf(t, means, sds)


@dataclass(frozen=True)
class AnalysisReport:
    """Complete posterior summary of one meta-analysis."""

    tau: Summary
    mu: Summary
    shrinkage: tuple[Summary, ...]
    prediction: Summary
    map_tau: float
    uisd: UisdEstimate | None
    labels: tuple[str, ...]
    level: float


def _require_integrable(data: Dataset, prior: TauPrior, eprior: EffectPrior) -> TauPrior:
    if isinstance(prior, ImproperUniform):
        if data.k < 3 or eprior.is_proper:
            raise ImproperPosteriorError(
                "the improper uniform heterogeneity prior requires at least 3 studies "
                "and an improper uniform effect prior"
            )
    if isinstance(prior, Jeffreys):
        if data.k < 2:
            raise ImproperPosteriorError("the Jeffreys prior requires at least 2 studies")
        if prior.sigmas is None:
            prior = prior.bind(data.sigma)
    return prior


def _log_likelihood_terms(data: Dataset, eprior: EffectPrior, tau: np.ndarray):
    """Per-node conditional mean/sd of mu and log marginal likelihood of tau.

    A proper normal effect prior acts as one extra pseudo-observation of mu
    whose variance does not grow with tau; conjugacy makes this exact.
    """
    y = data.y
    var = data.sigma**2
    w = 1.0 / (var[:, None] + tau[None, :] ** 2)
    if eprior.is_proper:
        w0 = np.full((1, tau.size), 1.0 / eprior.sd**2)
        w = np.vstack([w, w0])
        y = np.append(y, eprior.mean)
    total_w = w.sum(axis=0)
    mu_hat = (w * y[:, None]).sum(axis=0) / total_w
    resid = y[:, None] - mu_hat[None, :]
    quad = (w * resid**2).sum(axis=0)
    log_lik = 0.5 * np.log(w).sum(axis=0) - 0.5 * np.log(total_w) - 0.5 * quad
    return mu_hat, 1.0 / np.sqrt(total_w), log_lik


def _log_posterior_shape(data: Dataset, prior: TauPrior, eprior: EffectPrior, tau: np.ndarray):
    _, _, log_lik = _log_likelihood_terms(data, eprior, tau)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior.pdf(tau))
    return log_prior + log_lik


def _grid_upper_limit(data: Dataset, prior: TauPrior, eprior: EffectPrior) -> float:
    sigma = data.sigma
    if prior.is_proper:
        cap = float(prior.ppf(1.0 - 1e-9))
    else:
        cap = 1e3 * float(sigma.max())
    scan_lo = min(float(sigma.min()) * 1e-3, cap / 1e6)
    scan = np.concatenate([[0.0], np.geomspace(scan_lo, cap, 400)])
    log_post = _log_posterior_shape(data, prior, eprior, scan)
    shape = np.exp(log_post - log_post.max())
    steps = np.diff(scan)
    increments = 0.5 * steps * (shape[:-1] + shape[1:])
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    tail = 1.0 - cdf / cdf[-1]
    below = np.nonzero(tail < _TAIL_MASS)[0]
    if below.size == 0:
        return cap
    return float(scan[below[0]])


def _build_grid(data: Dataset, prior: TauPrior, eprior: EffectPrior, nodes: int) -> np.ndarray:
    tau_max = _grid_upper_limit(data, prior, eprior)
    tau_ref = float(data.sigma.max())
    if tau_max <= tau_ref * (1.0 + 1e-9):
        return np.linspace(0.0, tau_max, nodes)
    n_lin = nodes // 2
    linear = np.linspace(0.0, tau_ref, n_lin)
    geometric = np.geomspace(tau_ref, tau_max, nodes - n_lin + 1)[1:]
    return np.concatenate([linear, geometric])


def tau_marginal_posterior(
    data: Dataset,
    prior: TauPrior,
    eprior: EffectPrior | None = None,
    nodes: int = DEFAULT_GRID_NODES,
) -> GridPosterior:
    """Marginal heterogeneity posterior on an adaptive grid.

    The grid runs linearly up to the largest standard error and extends
    geometrically until prior-times-likelihood mass beyond the end point
    is negligible; normalization is by trapezoidal quadrature.
    """
    if eprior is None:
        eprior = EffectPrior.improper_uniform()
    if nodes < 50:
        raise DomainError("grid needs at least 50 nodes")
    prior = _require_integrable(data, prior, eprior)
    tau = _build_grid(data, prior, eprior, nodes)
    mu_hat, mu_sd, log_lik = _log_likelihood_terms(data, eprior, tau)
    with np.errstate(divide="ignore"):
        log_prior = np.log(prior.pdf(tau))
    log_post = log_prior + log_lik
    density = np.exp(log_post - log_post[np.isfinite(log_post)].max())
    density[~np.isfinite(log_post)] = 0.0
    return GridPosterior(tau, density, mu_hat, mu_sd, log_lik, data, prior, eprior)


def _shortest_interval(cdf, quantile, level: float, support_lo: float | None):
    """Narrowest interval holding ``level`` mass, by golden search on the left end.

    ``support_lo`` gives a hard lower boundary (0 for scale parameters);
    ties against the boundary resolve toward the one-sided interval.
    """
    a_hi = quantile(1.0 - level)
    a_lo = support_lo if support_lo is not None else quantile(1e-7)

    def width(a: float) -> float:
        return quantile(cdf(a) + level) - a

    if a_hi <= a_lo:
        return a_lo, quantile(cdf(a_lo) + level)
    res = optimize.minimize_scalar(
        width, bounds=(a_lo, a_hi), method="bounded", options={"xatol": 1e-6 * (a_hi - a_lo)}
    )
    best_a = float(res.x)
    if width(a_lo) <= width(best_a) + 1e-12 * max(1.0, abs(width(best_a))):
        best_a = a_lo
    return best_a, quantile(cdf(best_a) + level)


def summarize_tau(gp: GridPosterior, level: float = 0.95, kind: str = "shortest") -> Summary:
    """Posterior median and credible interval of the heterogeneity."""
    median = gp.tau_quantile(0.5)
    if kind == "central":
        lo, hi = gp.tau_quantile((1 - level) / 2), gp.tau_quantile((1 + level) / 2)
    elif kind == "shortest":
        lo, hi = _shortest_interval(gp.tau_cdf, gp.tau_quantile, level, support_lo=0.0)
    else:
        raise DomainError(f"unknown interval kind {kind!r}")
    mean = float(gp.node_mass @ gp.tau)
    sd = math.sqrt(float(gp.node_mass @ (gp.tau - mean) ** 2))
    return Summary(median, lo, hi, level, kind, sd)


def _mixture_summary(gp: GridPosterior, means, sds, level: float, kind: str) -> Summary:
    def cdf(t):
        return gp._mixture_cdf(t, means, sds)

    def quantile(p):
        return gp._mixture_quantile(p, means, sds)

    median = quantile(0.5)
    if kind == "central":
        lo, hi = quantile((1 - level) / 2), quantile((1 + level) / 2)
    elif kind == "shortest":
        lo, hi = _shortest_interval(cdf, quantile, level, support_lo=None)
    else:
        raise DomainError(f"unknown interval kind {kind!r}")
    return Summary(median, lo, hi, level, kind, gp._mixture_sd(means, sds))


def mu_marginal_posterior(gp: GridPosterior, level: float = 0.95, kind: str = "shortest") -> Summary:
    """Marginal posterior of the overall mean effect."""
    return _mixture_summary(gp, gp.cond_mu_mean, gp.cond_mu_sd, level, kind)


def shrinkage_posterior(gp: GridPosterior, i: int, level: float = 0.95, kind: str = "shortest") -> Summary:
    """Marginal posterior of study ``i``'s true effect."""
    if not 0 <= i < gp.data.k:
        raise DomainError(f"study index {i} out of range")
    means, sds = gp._shrinkage_moments(i)
    return _mixture_summary(gp, means, sds, level, kind)


def prediction_posterior(gp: GridPosterior, level: float = 0.95, kind: str = "shortest") -> Summary:
    """Posterior predictive distribution of a new study's effect."""
    means, sds = gp._prediction_moments()
    return _mixture_summary(gp, means, sds, level, kind)


def report_from_grid(gp: GridPosterior, level: float = 0.95, kind: str = "shortest") -> AnalysisReport:
    """Collect every summary of an already-computed grid posterior."""
    if not 0.5 < level < 1:
        raise DomainError("credible level must lie in (0.5, 1)")
    data = gp.data
    shrinkage = tuple(shrinkage_posterior(gp, i, level, kind) for i in range(data.k))
    if all(s.n is not None for s in data.studies):
        uisd = empirical_uisd(data)
    else:
        uisd = None
    return AnalysisReport(
        tau=summarize_tau(gp, level, kind),
        mu=mu_marginal_posterior(gp, level, kind),
        shrinkage=shrinkage,
        prediction=prediction_posterior(gp, level, kind),
        map_tau=gp.map_tau(),
        uisd=uisd,
        labels=tuple(data.labels),
        level=level,
    )


def analyze(
    data: Dataset,
    prior: TauPrior,
    eprior: EffectPrior | None = None,
    level: float = 0.95,
    kind: str = "shortest",
    nodes: int = DEFAULT_GRID_NODES,
) -> AnalysisReport:
    """Run the full analysis and collect every summary in one report."""
    gp = tau_marginal_posterior(data, prior, eprior, nodes)
    return report_from_grid(gp, level, kind)
