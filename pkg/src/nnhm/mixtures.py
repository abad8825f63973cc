"""Heavy-tailed priors built as scale mixtures of simpler families.

An exponential density whose scale is inverse-gamma distributed
marginalizes to a Lomax density; a half-normal whose scale follows a
scaled inverse-chi law marginalizes to a half-Student-t.  Both
constructions are parameterized by the mean and coefficient of
variation of the mixing scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DomainError
from .priors import HalfNormal, HalfStudentT, Lomax, TauPrior

__all__ = [
    "MixingSpec",
    "ScaledInverseChi",
    "lomax_from_mixture",
    "half_t_from_mixture",
    "cv_to_nu",
    "nu_to_cv",
    "inverse_chi_density",
]

# cv(nu) is monotone decreasing on this bracket; cv(2.1) ~ 2.50, beyond which
# the mixture's moments degenerate, and above ~1e5 the moment expressions
# lose precision to cancellation.
_NU_LO = 2.09
_NU_HI = 1e5
MAX_MIXING_CV = 2.5


@dataclass(frozen=True)
class MixingSpec:
    """Mean and coefficient of variation of an uncertain scale parameter."""

    scale_mean: float
    scale_cv: float

    def __post_init__(self):
        if not self.scale_mean > 0:
            raise DomainError("scale mean must be > 0")
        if self.scale_cv < 0:
            raise DomainError("scale cv must be >= 0")


@dataclass(frozen=True)
class ScaledInverseChi:
    """Law of scale/sqrt(X) for X chi-square distributed with ``df`` degrees."""

    df: float
    scale: float

    def __post_init__(self):
        if not (self.df > 0 and self.scale > 0):
            raise DomainError("df and scale must be > 0")

    def pdf(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= 0):
            raise DomainError("x must be > 0")
        nu, s = self.df, self.scale
        log_p = (
            (1.0 - nu / 2.0) * math.log(2.0)
            - math.log(s)
            - special.gammaln(nu / 2.0)
            + (nu + 1.0) * (math.log(s) - np.log(arr))
            - s * s / (2.0 * arr * arr)
        )
        out = np.exp(log_p)
        return float(out) if np.ndim(x) == 0 else out

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr <= 0):
            raise DomainError("x must be > 0")
        out = special.chdtrc(self.df, self.scale**2 / arr**2)
        return float(out) if np.ndim(x) == 0 else out

    def mean(self) -> float:
        if self.df <= 1:
            raise DomainError("mean requires df > 1")
        return self.scale * math.exp(
            special.gammaln((self.df - 1.0) / 2.0)
            - special.gammaln(self.df / 2.0)
            - 0.5 * math.log(2.0)
        )

    def var(self) -> float:
        if self.df <= 2:
            raise DomainError("variance requires df > 2")
        ratio_sq = math.exp(
            2.0 * (special.gammaln((self.df - 1.0) / 2.0) - special.gammaln(self.df / 2.0))
        )
        return self.scale**2 * (1.0 / (self.df - 2.0) - ratio_sq / 2.0)

    def cv(self) -> float:
        return math.sqrt(self.var()) / self.mean()


def inverse_chi_density(x, nu: float, s: float):
    """Density of the scaled inverse-chi law at ``x``."""
    return ScaledInverseChi(nu, s).pdf(x)


def nu_to_cv(nu: float) -> float:
    """Coefficient of variation of the scaled inverse-chi law (scale-free)."""
    if not nu > 2:
        raise DomainError("cv requires df > 2")
    return ScaledInverseChi(nu, 1.0).cv()


def cv_to_nu(cv: float) -> float:
    """Invert the monotone cv(nu) map of the scaled inverse-chi family."""
    if not 0 < cv <= MAX_MIXING_CV:
        raise DomainError(f"cv must lie in (0, {MAX_MIXING_CV}]; got {cv}")
    cv_floor = nu_to_cv(_NU_HI)
    if cv < cv_floor:
        raise DomainError(f"cv below {cv_floor:.2e} is indistinguishable from zero")
    log_nu = optimize.brentq(
        lambda t: nu_to_cv(math.exp(t)) - cv,
        math.log(_NU_LO),
        math.log(_NU_HI),
        xtol=1e-13,
    )
    return math.exp(log_nu)


def lomax_from_mixture(spec: MixingSpec) -> Lomax:
    """Exponential prior with inverse-gamma scale, marginalized to a Lomax."""
    if spec.scale_cv == 0:
        raise DomainError("cv = 0 leaves a plain exponential; no mixture to build")
    inv_cv2 = 1.0 / spec.scale_cv**2
    return Lomax(shape=2.0 + inv_cv2, scale=spec.scale_mean * (1.0 + inv_cv2))


def half_t_from_mixture(spec: MixingSpec) -> TauPrior:
    """Half-normal prior with scaled inverse-chi scale, marginalized to a half-t.

    The degrees of freedom come from the mixing cv; the half-t scale is set
    so the mixture's expected half-normal scale equals ``spec.scale_mean``.
    A zero cv degenerates to the plain half-normal.
    """
    if spec.scale_cv == 0:
        return HalfNormal(spec.scale_mean)
    nu = cv_to_nu(spec.scale_cv)
    implied_mean = ScaledInverseChi(nu, math.sqrt(nu)).mean()
    return HalfStudentT(df=nu, scale=spec.scale_mean / implied_mean)
