"""Exception types shared across the package."""


class RatdynError(Exception):
    """Base class for all package-specific errors."""


class NonConvergence(RatdynError):
    """An iterative solve exhausted its budget without meeting tolerance."""


class BudgetExceeded(RatdynError):
    """A requested computation would exceed a configured size budget."""


class EvaluationAtInfinity(RatdynError):
    """A function without a defined value at infinity was evaluated there."""


class CoprimalityError(RatdynError):
    """Numerator and denominator share a common factor above tolerance."""


class CoverTooCoarse(RatdynError):
    """A cover piece contains two points of one fiber, so no frame exists."""


class FrameUnavailable(RatdynError):
    """Frame construction refused: the Julia set carries critical points."""


class WitnessFailed(RatdynError):
    """A witness construction missed its certified tolerance."""


class TabulationMiss(RatdynError):
    """A tabulated function was queried beyond its lookup radius."""


class UnknownExample(RatdynError):
    """Requested registry entry does not exist."""
