"""Exception hierarchy shared by all solver modules."""


class AxiswirlError(Exception):
    """Base class for solver errors."""


class ValidationError(AxiswirlError, ValueError):
    """Input outside the supported parameter range."""


class DomainError(AxiswirlError, ValueError):
    """Argument outside the domain of a formula or transform."""


class SingularityError(AxiswirlError, ArithmeticError):
    """A denominator of the ODE vanishes at the requested point."""


class ClassificationError(AxiswirlError, RuntimeError):
    """An orbit could not be assigned an endpoint."""


class InvariantBreach(AxiswirlError, RuntimeError):
    """A property guaranteed by the theory failed numerically."""


class AssemblyError(AxiswirlError, RuntimeError):
    """Adjacent solution pieces do not join continuously."""
