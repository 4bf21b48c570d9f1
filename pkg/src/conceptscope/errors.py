"""Exception taxonomy shared across the package."""


class ConceptScopeError(Exception):
    """Base class for all package errors."""


class ShapeError(ConceptScopeError):
    """Array dimensions do not agree with the documented contract."""


class InputError(ConceptScopeError):
    """Input contains non-finite or otherwise inadmissible values."""


class NumericalError(ConceptScopeError):
    """A computation produced a non-finite result.

    ``index`` identifies the offending coordinate in the flattened
    parameter layout when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DivergenceError(ConceptScopeError):
    """Leapfrog integration left the finite domain. Carries the step index."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateInputError(ConceptScopeError):
    """Input is degenerate for the requested operation (e.g. zero-norm vector)."""


class UnsupportedMetricError(ConceptScopeError):
    """The metric is not usable with the requested selector."""


class GenerationError(ConceptScopeError):
    """A synthetic data generator could not certify its construction."""


class StorageError(ConceptScopeError):
    """Artifact store lookup or integrity check failed."""
