"""Exception types raised by the library.

Each class carries an ``exit_code`` used by the command line front end to map
failures onto process exit categories.
"""


class LpgoosError(Exception):
    exit_code = 1


class ConfigurationError(LpgoosError, ValueError):
    """Invalid parameters for a distribution, schedule or experiment."""

    exit_code = 2


class DomainError(LpgoosError, ValueError):
    """An input lies outside the domain on which a kernel or sampler is defined."""

    exit_code = 2


class IngestionError(LpgoosError, ValueError):
    exit_code = 3


class ProvenanceError(IngestionError):
    """A dataset does not match the canonical file an experiment is defined on."""


class NumericalError(LpgoosError, ArithmeticError):
    exit_code = 4


class DegenerateSpectrumError(NumericalError):
    pass


class IndefiniteSpectrumError(NumericalError):
    pass


class ClusteringError(NumericalError):
    pass


class DegenerateLabelsError(LpgoosError, ValueError):
    """Training labels contain a single class."""

    exit_code = 2
