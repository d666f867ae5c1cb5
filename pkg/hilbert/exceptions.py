"""
Numerical failure types shared by the simulator apps.

Bad input (shapes, rates, site lists) is reported with Django's
ValidationError; the classes below signal that a computation itself went
wrong and its result cannot be trusted.
"""


class NumericalError(Exception):
    """Base class for numerical failures."""


class ChannelNotCPTPError(NumericalError):
    """A map that must be completely positive and trace preserving is not."""


class DefectiveSpectrumError(NumericalError):
    """Eigenvectors could not be biorthonormalized (non-trivial Jordan block)."""

    def __init__(self, message, condition_number=None, residual=None):
        super().__init__(message)
        self.condition_number = condition_number
        self.residual = residual


class DegenerateSteadyStateError(NumericalError):
    """The generator has more (or fewer) than one zero eigenvalue."""


class SeriesDivergenceError(NumericalError):
    """A perturbation series stopped shrinking term by term."""


class SingularChannelError(NumericalError):
    """A channel that must be inverted is singular."""


class RankCollapseError(NumericalError):
    """A fitted signal carries fewer independent modes than requested."""


class FitQualityError(NumericalError):
    """A fitted model does not describe its data to the required accuracy."""
