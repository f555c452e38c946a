"""Exception types shared across the package.

Every failure mode that callers are expected to catch gets its own class so
that the CLI can map them onto stable exit codes.
"""

from __future__ import annotations


class CrlabError(Exception):
    """Base class for all package-specific errors."""


class GeometryDomainError(CrlabError, ValueError):
    """A point left the open unit disk, or a Mobius denominator vanished."""


class UnsupportedError(CrlabError, ValueError):
    """Validation failure: parameters outside the supported range (genus < 2,
    non-positive twisting integer, bad weights)."""


class WeightError(CrlabError, TypeError):
    """An operation received a section of the wrong automorphy weight."""


class UsageError(CrlabError, ValueError):
    """Bad command line arguments or config file entries; exit code 2."""


class ConstructionError(CrlabError, RuntimeError):
    """Mesh or group assembly produced inconsistent combinatorics, e.g. a
    boundary vertex whose partner under the side pairing cannot be matched."""


class SolvabilityError(CrlabError, ArithmeticError):
    """A compatibility integral that must vanish on a closed surface did not."""


class NonconvergenceError(CrlabError, RuntimeError):
    """An iterative solver exhausted its iteration budget."""

    def __init__(self, message: str, history=None):
        super().__init__(message)
        self.history = list(history) if history is not None else []


class CertificateError(CrlabError, RuntimeError):
    """A pointwise quantity that must be constant on the surface failed its
    near-constancy check."""

    def __init__(self, message: str, stats=None):
        super().__init__(message)
        self.stats = dict(stats) if stats is not None else {}


class InconclusiveSpectrumError(CrlabError, RuntimeError):
    """No decisive gap in a singular value spectrum; carries the spectrum so
    callers can inspect or report it."""

    def __init__(self, message: str, spectrum=None, gap_ratio: float = 0.0):
        super().__init__(message)
        self.spectrum = None if spectrum is None else list(spectrum)
        self.gap_ratio = float(gap_ratio)


class DegenerateInputError(CrlabError, ValueError):
    """A deformation too large for the rational parametrization (operator
    norm >= 2, or a singular matrix inversion in the chart)."""


class RecordValidationError(CrlabError, ValueError):
    """An almost-complex coefficient record violates its algebraic
    constraints."""
