"""Exception types shared across the package."""


class NnhmError(Exception):
    """Base class for all package-specific errors."""


class DomainError(NnhmError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PriorSpecError(NnhmError, ValueError):
    """A prior specification string or preset name could not be resolved."""


class ImproperPriorError(NnhmError):
    """A proper-prior-only operation was invoked on an improper prior."""


class ImproperPosteriorError(NnhmError):
    """An improper prior would not yield an integrable posterior for this dataset."""


class DataError(NnhmError, ValueError):
    """An input file or record is malformed."""
