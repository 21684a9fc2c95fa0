"""Exception types shared across the package."""


class RotorAnnulusError(Exception):
    """Base class for all package errors."""


class ConfigError(RotorAnnulusError, ValueError):
    pass


class Unreachable(RotorAnnulusError, ValueError):
    """The trajectory does not reach the inner scatterer."""


class EmptyCircle(RotorAnnulusError, ValueError):
    """Energy sphere and momentum plane do not intersect."""


class OffCircle(RotorAnnulusError, ValueError):
    pass


class InvalidState(RotorAnnulusError, ValueError):
    pass


class NonAlternating(RotorAnnulusError, ValueError):
    """Operation requires the alternating case (empty miss set)."""


class ConventionViolated(RotorAnnulusError, ValueError):
    pass


class OutOfRange(RotorAnnulusError, ValueError):
    pass


class PreconditionUnmet(RotorAnnulusError):
    pass


class Stuck(RotorAnnulusError):
    pass


class NumericalDrift(RotorAnnulusError):
    pass
