"""Exception hierarchy.

Ingest problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`. The CLI maps these two families onto its exit codes.
"""


class CoherenzaError(Exception):
    pass


class InputError(CoherenzaError):
    pass


class MissingCell(InputError):
    pass


class NonLatticeCoordinate(InputError):
    pass


class NegativeRainfall(InputError):
    pass


class NonContiguousYears(InputError):
    pass


class BadMagic(InputError):
    pass


class TruncatedFile(InputError):
    pass


class VersionMismatch(InputError):
    pass


class TooShort(InputError):
    pass


class YearMisalignment(InputError):
    pass


class MissingDependency(CoherenzaError):
    pass


class InvalidBins(CoherenzaError):
    pass


class NumericalError(CoherenzaError):
    pass


class EigenFailure(NumericalError):
    pass


class DegenerateRow(NumericalError):
    pass


class DegenerateSigma(UserWarning):
    """Issued when a location has zero spread and so can never be extreme."""


class MixedYearWarning(UserWarning):
    """A year qualified as both locational PEX and NEX."""
