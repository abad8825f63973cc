"""Study-level records consumed by the analysis engine."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError

__all__ = ["EffectEstimate", "Dataset"]


@dataclass(frozen=True)
class EffectEstimate:
    """One study's estimate, its standard error and optional sample size."""

    y: float
    sigma: float
    n: int | None = None
    label: str = ""

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"standard error must be > 0, got {self.sigma}")
        if self.n is not None and not self.n >= 1:
            raise DomainError(f"sample size must be >= 1, got {self.n}")


@dataclass(frozen=True)
class Dataset:
    """Nonempty collection of study estimates with unique labels."""

    studies: tuple[EffectEstimate, ...]

    def __init__(self, studies):
        studies = tuple(studies)
        if not studies:
            raise DataError("dataset must contain at least one study")
        labelled = []
        for i, s in enumerate(studies):
            labelled.append(s if s.label else EffectEstimate(s.y, s.sigma, s.n, f"study {i + 1}"))
        labels = [s.label for s in labelled]
        if len(set(labels)) != len(labels):
            raise DataError("study labels must be unique")
        object.__setattr__(self, "studies", tuple(labelled))

    @property
    def k(self) -> int:
        return len(self.studies)

    @property
    def y(self) -> np.ndarray:
        return np.array([s.y for s in self.studies])

    @property
    def sigma(self) -> np.ndarray:
        return np.array([s.sigma for s in self.studies])

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.studies]

    def sample_sizes(self) -> np.ndarray:
        """Per-study sample sizes; raises if any study lacks one."""
        missing = [s.label for s in self.studies if s.n is None]
        if missing:
            raise DataError(f"sample size missing for: {', '.join(missing)}")
        return np.array([s.n for s in self.studies], dtype=float)
