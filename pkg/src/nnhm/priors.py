"""Probability distribution families used as heterogeneity priors.

Every family lives on the nonnegative half-line.  Proper families expose
density, CDF, quantile and closed-form moments; the two improper ones
(unbounded uniform and the standard-error-dependent default) expose a
density only and raise :class:`ImproperPriorError` elsewhere.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from .errors import DomainError, ImproperPriorError, PriorSpecError

__all__ = [
    "DistributionSummary",
    "TauPrior",
    "HalfNormal",
    "HalfStudentT",
    "HalfCauchy",
    "HalfLogistic",
    "Exponential",
    "Lomax",
    "LogNormal",
    "LogStudentT",
    "ProperUniform",
    "ImproperUniform",
    "Jeffreys",
    "scale_to_median",
    "parse_prior",
]

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


def _as_float_array(x, name: str, nonnegative: bool = True):
    arr = np.asarray(x, dtype=float)
    if nonnegative and np.any(arr < 0):
        raise DomainError(f"{name} must be nonnegative")
    return arr


def _scalar_like(result: np.ndarray, template) -> float | np.ndarray:
    if np.isscalar(template) or np.ndim(template) == 0:
        return float(result)
    return result


def _check_prob(p) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr >= 1)):
        raise DomainError("probability must lie in [0, 1)")
    return arr


def _t_logpdf(z: np.ndarray, df: float) -> np.ndarray:
    c = (
        special.gammaln((df + 1.0) / 2.0)
        - special.gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
    )
    return c - (df + 1.0) / 2.0 * np.log1p(z * z / df)


def _half_t_mean_factor(df: float) -> float:
    # E|T_df| = sqrt(df/pi) * Gamma((df-1)/2) / Gamma(df/2), finite for df > 1.
    return math.exp(
        0.5 * math.log(df / math.pi)
        + special.gammaln((df - 1.0) / 2.0)
        - special.gammaln(df / 2.0)
    )


@dataclass(frozen=True)
class DistributionSummary:
    """Closed-form location and spread figures of a proper prior."""

    median: float
    q95: float
    mean: float | None
    sd: float | None

    @property
    def cv(self) -> float | None:
        """Coefficient of variation sd/mean, when both moments exist."""
        if self.mean is None or self.sd is None:
            return None
        return self.sd / self.mean


class TauPrior:
    """Common behaviour of heterogeneity priors.

    Subclasses implement :meth:`pdf` and, when proper, :meth:`cdf`,
    :meth:`ppf` and :meth:`_moments`.  All instances are immutable and
    every method is pure, so objects are safe to share across threads.
    """

    is_proper: bool = True
    family: str = ""

    # -- core law -----------------------------------------------------------

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        self._require_proper("cdf")
        raise NotImplementedError

    def ppf(self, p):
        self._require_proper("quantile")
        raise NotImplementedError

    def _moments(self) -> tuple[float | None, float | None]:
        raise NotImplementedError

    # -- derived ------------------------------------------------------------

    def summarize(self) -> DistributionSummary:
        """Median, 95% quantile, mean and sd (the latter two may be undefined)."""
        self._require_proper("summarize")
        mean, sd = self._moments()
        return DistributionSummary(
            median=float(self.ppf(0.5)), q95=float(self.ppf(0.95)), mean=mean, sd=sd
        )

    def interval_probability(self, lo: float, hi: float) -> float:
        """P(lo < tau <= hi); ``hi`` may be infinite."""
        self._require_proper("interval probability")
        upper = 1.0 if math.isinf(hi) else float(self.cdf(hi))
        return upper - float(self.cdf(lo))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draws; deterministic for a given generator state."""
        self._require_proper("sampling")
        return np.asarray(self.ppf(rng.random(count)))

    # -- scale handling ------------------------------------------------------

    @property
    def scale_value(self) -> float:
        raise DomainError(f"{self.family} has no scale parameter")

    def with_scale(self, scale: float) -> "TauPrior":
        raise DomainError(f"{self.family} has no scale parameter")

    # -- misc ----------------------------------------------------------------

    def spec(self) -> str:
        raise NotImplementedError

    def label(self) -> str:
        """Human-readable name, e.g. ``half-normal(0.50)``."""
        return self.spec()

    def _require_proper(self, what: str) -> None:
        if not self.is_proper:
            raise ImproperPriorError(f"{what} undefined for improper {self.family} prior")

    def _check_positive(self, **params: float) -> None:
        for name, value in params.items():
            if not value > 0:
                raise DomainError(f"{self.family} parameter {name} must be > 0, got {value}")


@dataclass(frozen=True)
class HalfNormal(TauPrior):
    scale: float = 1.0
    family = "half-normal"

    def __post_init__(self):
        self._check_positive(scale=self.scale)

    def pdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(_SQRT_2_OVER_PI / self.scale * np.exp(-0.5 * z * z), x)

    def cdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(special.erf(z / math.sqrt(2.0)), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(self.scale * special.ndtri((1.0 + q) / 2.0), p)

    def _moments(self):
        mean = self.scale * _SQRT_2_OVER_PI
        sd = self.scale * math.sqrt(1.0 - 2.0 / math.pi)
        return mean, sd

    @property
    def scale_value(self):
        return self.scale

    def with_scale(self, scale):
        return HalfNormal(scale)

    def spec(self):
        return f"halfnormal({self.scale:g})"

    def label(self):
        return f"half-normal({self.scale:.2f})"


@dataclass(frozen=True)
class HalfStudentT(TauPrior):
    df: float
    scale: float = 1.0
    family = "half-Student-t"

    def __post_init__(self):
        self._check_positive(df=self.df, scale=self.scale)

    def pdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(2.0 / self.scale * np.exp(_t_logpdf(z, self.df)), x)

    def cdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(2.0 * special.stdtr(self.df, z) - 1.0, x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(self.scale * special.stdtrit(self.df, (1.0 + q) / 2.0), p)

    def _moments(self):
        if self.df <= 1.0:
            return None, None
        mean = self.scale * _half_t_mean_factor(self.df)
        if self.df <= 2.0:
            return mean, None
        second = self.scale**2 * self.df / (self.df - 2.0)
        return mean, math.sqrt(second - mean * mean)

    @property
    def scale_value(self):
        return self.scale

    def with_scale(self, scale):
        return replace(self, scale=scale)

    def spec(self):
        return f"halfstudentt({self.df:g},{self.scale:g})"

    def label(self):
        return f"half-Student-t({self.df:g}, {self.scale:.2f})"


@dataclass(frozen=True)
class HalfCauchy(TauPrior):
    scale: float = 1.0
    family = "half-Cauchy"

    def __post_init__(self):
        self._check_positive(scale=self.scale)

    def pdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(2.0 / (math.pi * self.scale) / (1.0 + z * z), x)

    def cdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(2.0 / math.pi * np.arctan(z), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(self.scale * np.tan(math.pi * q / 2.0), p)

    def _moments(self):
        return None, None

    @property
    def scale_value(self):
        return self.scale

    def with_scale(self, scale):
        return HalfCauchy(scale)

    def spec(self):
        return f"halfcauchy({self.scale:g})"

    def label(self):
        return f"half-Cauchy({self.scale:.2f})"


@dataclass(frozen=True)
class HalfLogistic(TauPrior):
    scale: float = 1.0
    family = "half-logistic"

    def __post_init__(self):
        self._check_positive(scale=self.scale)

    def pdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        e = np.exp(-z)
        return _scalar_like(2.0 * e / (self.scale * (1.0 + e) ** 2), x)

    def cdf(self, x):
        z = _as_float_array(x, "x") / self.scale
        return _scalar_like(np.tanh(z / 2.0), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(2.0 * self.scale * np.arctanh(q), p)

    def _moments(self):
        mean = self.scale * math.log(4.0)
        sd = self.scale * math.sqrt(math.pi**2 / 3.0 - math.log(4.0) ** 2)
        return mean, sd

    @property
    def scale_value(self):
        return self.scale

    def with_scale(self, scale):
        return HalfLogistic(scale)

    def spec(self):
        return f"halflogistic({self.scale:g})"

    def label(self):
        return f"half-logistic({self.scale:.2f})"


@dataclass(frozen=True)
class Exponential(TauPrior):
    rate: float = 1.0
    family = "exponential"

    def __post_init__(self):
        self._check_positive(rate=self.rate)

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(self.rate * np.exp(-self.rate * arr), x)

    def cdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(-np.expm1(-self.rate * arr), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(-np.log1p(-q) / self.rate, p)

    def _moments(self):
        return 1.0 / self.rate, 1.0 / self.rate

    @property
    def scale_value(self):
        return 1.0 / self.rate

    def with_scale(self, scale):
        if not scale > 0:
            raise DomainError("scale must be > 0")
        return Exponential(rate=1.0 / scale)

    def spec(self):
        return f"exponential(scale={self.scale_value:g})"

    def label(self):
        # conventionally labelled by scale, matching median-matched sweeps
        return f"exponential({self.scale_value:.2f})"


@dataclass(frozen=True)
class Lomax(TauPrior):
    shape: float
    scale: float = 1.0
    family = "Lomax"

    def __post_init__(self):
        self._check_positive(shape=self.shape, scale=self.scale)

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(
            self.shape / self.scale * np.exp(-(self.shape + 1.0) * np.log1p(arr / self.scale)),
            x,
        )

    def cdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(-np.expm1(-self.shape * np.log1p(arr / self.scale)), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(self.scale * np.expm1(-np.log1p(-q) / self.shape), p)

    def _moments(self):
        if self.shape <= 1.0:
            return None, None
        mean = self.scale / (self.shape - 1.0)
        if self.shape <= 2.0:
            return mean, None
        var = self.scale**2 * self.shape / ((self.shape - 1.0) ** 2 * (self.shape - 2.0))
        return mean, math.sqrt(var)

    @property
    def scale_value(self):
        return self.scale

    def with_scale(self, scale):
        return replace(self, scale=scale)

    def spec(self):
        return f"lomax({self.shape:g},{self.scale:g})"

    def label(self):
        return f"Lomax({self.shape:g}, {self.scale:.2f})"


@dataclass(frozen=True)
class LogNormal(TauPrior):
    mu: float
    sigma: float
    family = "log-normal"

    def __post_init__(self):
        self._check_positive(sigma=self.sigma)

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        out = np.zeros_like(arr)
        pos = arr > 0
        z = (np.log(arr[pos]) - self.mu) / self.sigma
        out[pos] = np.exp(-0.5 * z * z) / (arr[pos] * self.sigma * math.sqrt(2.0 * math.pi))
        return _scalar_like(out, x)

    def cdf(self, x):
        arr = _as_float_array(x, "x")
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = special.ndtr((np.log(arr[pos]) - self.mu) / self.sigma)
        return _scalar_like(out, x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(np.exp(self.mu + self.sigma * special.ndtri(q)), p)

    def _moments(self):
        mean = math.exp(self.mu + self.sigma**2 / 2.0)
        sd = mean * math.sqrt(math.expm1(self.sigma**2))
        return mean, sd

    @property
    def scale_value(self):
        return math.exp(self.mu)

    def with_scale(self, scale):
        if not scale > 0:
            raise DomainError("scale must be > 0")
        return replace(self, mu=math.log(scale))

    def spec(self):
        return f"lognormal({self.mu:g},{self.sigma:g})"

    def label(self):
        return f"log-normal({self.mu:.2f}, {self.sigma:.2f})"


@dataclass(frozen=True)
class LogStudentT(TauPrior):
    mu: float
    sigma: float
    df: float
    family = "log-Student-t"

    def __post_init__(self):
        self._check_positive(sigma=self.sigma, df=self.df)

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        out = np.zeros_like(arr)
        pos = arr > 0
        z = (np.log(arr[pos]) - self.mu) / self.sigma
        out[pos] = np.exp(_t_logpdf(z, self.df)) / (self.sigma * arr[pos])
        return _scalar_like(out, x)

    def cdf(self, x):
        arr = _as_float_array(x, "x")
        out = np.zeros_like(arr)
        pos = arr > 0
        out[pos] = special.stdtr(self.df, (np.log(arr[pos]) - self.mu) / self.sigma)
        return _scalar_like(out, x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(np.exp(self.mu + self.sigma * special.stdtrit(self.df, q)), p)

    def _moments(self):
        # exp(sigma*T) has no finite moments of any positive order
        return None, None

    @property
    def scale_value(self):
        return math.exp(self.mu)

    def with_scale(self, scale):
        if not scale > 0:
            raise DomainError("scale must be > 0")
        return replace(self, mu=math.log(scale))

    def spec(self):
        return f"logstudentt({self.mu:g},{self.sigma:g},{self.df:g})"

    def label(self):
        return f"log-Student-t({self.mu:.2f}, {self.sigma:.3f}, {self.df:g})"


@dataclass(frozen=True)
class ProperUniform(TauPrior):
    bound: float
    family = "uniform"

    def __post_init__(self):
        self._check_positive(bound=self.bound)

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(np.where(arr <= self.bound, 1.0 / self.bound, 0.0), x)

    def cdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(np.clip(arr / self.bound, 0.0, 1.0), x)

    def ppf(self, p):
        q = _check_prob(p)
        return _scalar_like(q * self.bound, p)

    def _moments(self):
        return self.bound / 2.0, self.bound / math.sqrt(12.0)

    @property
    def scale_value(self):
        return self.bound

    def with_scale(self, scale):
        return ProperUniform(scale)

    def spec(self):
        return f"uniform({self.bound:g})"

    def label(self):
        return f"uniform(0, {self.bound:g})"


@dataclass(frozen=True)
class ImproperUniform(TauPrior):
    is_proper = False
    family = "uniform"

    def pdf(self, x):
        arr = _as_float_array(x, "x")
        return _scalar_like(np.ones_like(arr), x)

    def spec(self):
        return "uniform()"

    def label(self):
        return "uniform"


@dataclass(frozen=True)
class Jeffreys(TauPrior):
    """Default prior proportional to the root of the heterogeneity information.

    The density depends on the dataset's standard errors; an unbound
    instance must be bound via :meth:`bind` before evaluation.
    """

    sigmas: tuple[float, ...] | None = None
    is_proper = False
    family = "Jeffreys"

    def __post_init__(self):
        if self.sigmas is not None and any(s <= 0 for s in self.sigmas):
            raise DomainError("standard errors must be > 0")

    def bind(self, sigmas) -> "Jeffreys":
        return Jeffreys(tuple(float(s) for s in sigmas))

    def pdf(self, x):
        if self.sigmas is None:
            raise ImproperPriorError("Jeffreys prior must be bound to standard errors first")
        arr = _as_float_array(x, "x")
        tau2 = arr * arr
        total = np.zeros_like(arr)
        for s in self.sigmas:
            total += tau2 / (s * s + tau2) ** 2
        return _scalar_like(np.sqrt(total), x)

    def spec(self):
        return "jeffreys()"

    def label(self):
        return "Jeffreys"


def scale_to_median(prior: TauPrior, target_median: float) -> TauPrior:
    """Rescale a scale-parameterized family so its median equals ``target_median``."""
    if not target_median > 0:
        raise DomainError("target median must be > 0")
    if not prior.is_proper:
        raise DomainError("improper priors have no median to match")
    unit_median = float(prior.ppf(0.5)) / prior.scale_value
    return prior.with_scale(target_median / unit_median)


# -- specification strings ---------------------------------------------------

_FAMILY_FIELDS: dict[str, tuple[type, tuple[str, ...]]] = {
    "halfnormal": (HalfNormal, ("scale",)),
    "halfstudentt": (HalfStudentT, ("df", "scale")),
    "halfcauchy": (HalfCauchy, ("scale",)),
    "halflogistic": (HalfLogistic, ("scale",)),
    "exponential": (Exponential, ()),
    "lomax": (Lomax, ("shape", "scale")),
    "lognormal": (LogNormal, ("mu", "sigma")),
    "logstudentt": (LogStudentT, ("mu", "sigma", "df")),
    "uniform": (ProperUniform, ("bound",)),
    "jeffreys": (Jeffreys, ()),
}

_SPEC_RE = re.compile(r"^([a-z]+)\((.*)\)$")


def parse_prior(text: str) -> TauPrior:
    """Parse a prior specification string like ``halfnormal(0.5)``.

    Case and whitespace are ignored.  ``uniform()`` denotes the improper
    uniform; the exponential requires an explicit ``rate=`` or ``scale=``
    keyword because both conventions are in circulation.
    """
    compact = re.sub(r"\s+", "", text).lower()
    m = _SPEC_RE.match(compact)
    if m is None:
        raise PriorSpecError(f"cannot parse prior spec {text!r}")
    name, argstr = m.groups()
    if name not in _FAMILY_FIELDS:
        raise PriorSpecError(f"unknown prior family {name!r}")
    cls, fields = _FAMILY_FIELDS[name]

    positional: list[float] = []
    keywords: dict[str, float] = {}
    if argstr:
        for piece in argstr.split(","):
            if "=" in piece:
                key, _, value = piece.partition("=")
                keywords[key] = _spec_float(value, text)
            elif keywords:
                raise PriorSpecError(f"positional argument after keyword in {text!r}")
            else:
                positional.append(_spec_float(piece, text))

    if name == "uniform" and not positional and not keywords:
        return ImproperUniform()
    if name == "jeffreys":
        if positional or keywords:
            raise PriorSpecError("jeffreys() takes no parameters")
        return Jeffreys()
    if name == "exponential":
        if positional or set(keywords) - {"rate", "scale"} or len(keywords) != 1:
            raise PriorSpecError(
                "exponential requires exactly one of rate= or scale=, "
                "e.g. exponential(scale=0.49)"
            )
        if "rate" in keywords:
            return Exponential(rate=keywords["rate"])
        return Exponential(rate=1.0 / keywords["scale"])

    if len(positional) > len(fields):
        raise PriorSpecError(f"too many parameters for {name} in {text!r}")
    params = dict(zip(fields, positional))
    for key, value in keywords.items():
        if key not in fields:
            raise PriorSpecError(f"unknown parameter {key!r} for {name}")
        if key in params:
            raise PriorSpecError(f"duplicate parameter {key!r} in {text!r}")
        params[key] = value
    missing = [f for f in fields if f not in params]
    if missing:
        raise PriorSpecError(f"missing parameter(s) {missing} for {name}")
    try:
        return cls(**params)
    except DomainError as exc:
        raise PriorSpecError(str(exc)) from exc


def _spec_float(piece: str, text: str) -> float:
    try:
        return float(piece)
    except ValueError:
        raise PriorSpecError(f"bad numeric value {piece!r} in {text!r}") from None
