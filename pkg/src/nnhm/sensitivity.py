"""Prior sensitivity sweeps: rescaled, median-matched and noninformative variants."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .data import Dataset
from .engine import AnalysisReport, EffectPrior, analyze
from .errors import DomainError, ImproperPosteriorError
from .priors import (
    Exponential,
    HalfCauchy,
    HalfLogistic,
    HalfStudentT,
    ImproperUniform,
    Jeffreys,
    Lomax,
    TauPrior,
    scale_to_median,
)

__all__ = ["SensitivityPlan", "run_sensitivity", "FAMILY_PROTOTYPES"]

# unit-scale prototypes for median matching; the two Lomax shapes bracket
# moderately and extremely heavy tails
FAMILY_PROTOTYPES: dict[str, TauPrior] = {
    "halfstudentt3": HalfStudentT(df=3, scale=1.0),
    "halfcauchy": HalfCauchy(1.0),
    "halflogistic": HalfLogistic(1.0),
    "exponential": Exponential(rate=1.0),
    "lomax6": Lomax(shape=6, scale=1.0),
    "lomax1": Lomax(shape=1, scale=1.0),
}

DEFAULT_FAMILIES = tuple(FAMILY_PROTOTYPES)


@dataclass(frozen=True)
class SensitivityPlan:
    """What to vary around a base heterogeneity prior."""

    base_prior: TauPrior
    scale_factors: tuple[float, ...] = (0.5, 1.0, 2.0)
    families: tuple[str, ...] = DEFAULT_FAMILIES
    include_uniform: bool = True
    include_jeffreys: bool = True

    def __post_init__(self):
        if not self.base_prior.is_proper:
            raise DomainError("the base prior must be proper")
        self.base_prior.scale_value  # raises for non-scale families
        if any(f <= 0 for f in self.scale_factors):
            raise DomainError("scale factors must be > 0")
        for tag in self.families:
            if tag not in FAMILY_PROTOTYPES:
                raise DomainError(
                    f"unknown family tag {tag!r}; known: {', '.join(FAMILY_PROTOTYPES)}"
                )

    def variants(self) -> list[TauPrior]:
        """Base, rescaled, median-matched and noninformative priors, in order."""
        base = self.base_prior
        out: list[TauPrior] = [base]
        for factor in self.scale_factors:
            if factor == 1.0:
                continue
            out.append(base.with_scale(base.scale_value * factor))
        median = float(base.ppf(0.5))
        for tag in self.families:
            out.append(scale_to_median(FAMILY_PROTOTYPES[tag], median))
        if self.include_uniform:
            out.append(ImproperUniform())
        if self.include_jeffreys:
            out.append(Jeffreys())
        return out


def run_sensitivity(
    data: Dataset,
    plan: SensitivityPlan,
    eprior: EffectPrior | None = None,
    level: float = 0.95,
    kind: str = "shortest",
    nodes: int | None = None,
) -> list[tuple[str, AnalysisReport]]:
    """Analyze the dataset under every plan variant.

    Variants whose posterior would be improper for this dataset are
    skipped with a warning instead of failing the whole sweep.
    """
    rows: list[tuple[str, AnalysisReport]] = []
    kwargs = {} if nodes is None else {"nodes": nodes}
    for prior in plan.variants():
        try:
            report = analyze(data, prior, eprior, level=level, kind=kind, **kwargs)
        except ImproperPosteriorError as exc:
            warnings.warn(f"skipping {prior.label()}: {exc}", stacklevel=2)
            continue
        rows.append((prior.label(), report))
    return rows
