"""Exception hierarchy shared by every module of the package."""


class GeomRecError(Exception):
    """Base class for all package errors."""


class ParameterError(GeomRecError, ValueError):
    """A tuning parameter lies outside its admissible range."""


class DomainError(GeomRecError, ValueError):
    """An observation lies outside the support the method accepts."""


class EmptySampleError(GeomRecError):
    """No geometric-record block is available to estimate from."""


class MLENonexistenceError(GeomRecError):
    """The likelihood has no maximiser in the open parameter space."""


class DegenerateSampleError(GeomRecError):
    """The sample carries no information about the tail index."""


class OrderingError(GeomRecError, ValueError):
    """Record values are not strictly increasing where required."""


class TrialAbortedError(GeomRecError):
    """A simulated trial exceeded its observation budget."""


class AggregationError(GeomRecError):
    """Every replication of a Monte Carlo run failed."""
