"""Exception hierarchy shared by every simlaw module.

All simlaw exceptions derive from :class:`SimlawError`, so callers can catch
the whole family with one clause.  Checkers treat :class:`DomainError` and
:class:`RangeError` raised during a grid sweep as "point not evaluable": the
point is excluded and counted, never silently dropped.
"""

from __future__ import annotations


class SimlawError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SimlawError, ValueError):
    """An argument lies outside the declared domain of a function."""


class RangeError(SimlawError, ValueError):
    """A target value lies outside the attained range of a function."""


class NonMonotoneError(SimlawError, ValueError):
    """A function required to be strictly monotone is not."""


class NotInvertibleError(SimlawError, ValueError):
    """A map section required to be bijective is not strictly monotone."""


class ParamError(SimlawError, ValueError):
    """A constructor parameter violates its stated constraint."""


class EmptyGridError(SimlawError, ValueError):
    """A sweep evaluated zero points."""


class TooManyExclusionsError(SimlawError, ValueError):
    """More than half of the sweep points were excluded as out of domain."""


class GridSymmetryError(SimlawError, ValueError):
    """A grid that must be symmetric about a center is missing mirror points."""


class LinkRangeError(SimlawError, ValueError):
    """A psychometric link function leaves the open unit interval."""


class InsufficientDataError(SimlawError, ValueError):
    """Too few distinct samples to run a regression."""


class NonPositiveError(SimlawError, ValueError):
    """Data that must be strictly positive (for a log transform) is not."""


class DivergenceError(SimlawError, RuntimeError):
    """An iterative fit failed to find any descent step."""


class ConstraintError(SimlawError, ValueError):
    """Fit parameters left the admissible region."""


class NonConvergenceError(SimlawError, RuntimeError):
    """An alternating fit exhausted its rounds without reaching a plateau.

    The best iterate found so far is attached as the ``result`` attribute.
    """

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(SimlawError, ValueError):
    """A run configuration file is malformed or incomplete."""


class IoError(SimlawError, OSError):
    """A data file could not be read or written."""
