"""Exception hierarchy shared by every module of the toolkit."""


class GCBError(Exception):
    """Base class for all toolkit errors."""


class DomainError(GCBError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class ConfigurationError(GCBError, ValueError):
    """Malformed model, problem or solver configuration."""


class UnattainableAccuracyError(GCBError):
    """Requested accuracy cannot be reached for the given model or domain."""


class NumericalError(GCBError):
    """A numerical routine did not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SamplingError(GCBError):
    """Brute-force sampling hit a non-finite function value."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class OracleError(GCBError):
    """The first-order oracle returned a non-finite value at a feasible point."""


class CatalogError(GCBError, KeyError):
    """Unknown built-in problem name."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class CapabilityError(GCBError, NotImplementedError):
    """The requested (geometry, simple part) pair has no closed-form solver."""


class LineSearchError(GCBError):
    """The doubling line search exceeded its cap."""

    def __init__(self, message, last_i=None, iteration=None):
        super().__init__(message)
        self.last_i = last_i
        self.iteration = iteration


class InvariantViolation(GCBError):
    """An online certificate failed beyond tolerance; indicates a bug."""

    def __init__(self, message, name=None, iteration=None, lhs=None, rhs=None):
        super().__init__(message)
        self.name = name
        self.iteration = iteration
        self.lhs = lhs
        self.rhs = rhs


class TraceParseError(GCBError, ValueError):
    """A trace file could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
