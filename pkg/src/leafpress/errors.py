"""Exception types raised across the package."""


class LeafpressError(Exception):
    """Base class for estimator and model errors."""


class NotUnimodular(LeafpressError):
    pass


class NotPartiallyHyperbolic(LeafpressError):
    pass


class ComplexUnstable(LeafpressError):
    pass


class BadRadius(LeafpressError):
    pass


class BadCellSide(LeafpressError):
    pass


class LengthMismatch(LeafpressError):
    pass


class OutOfRange(LeafpressError):
    pass


class DegenerateSample(LeafpressError):
    pass


class Infeasible(LeafpressError):
    """No cover built from the candidate balls reaches the required mass."""


class BracketFailure(LeafpressError):
    pass


class EmptySurvivors(LeafpressError):
    pass


class FixtureTooLarge(LeafpressError):
    pass


class ConfigError(LeafpressError):
    pass
