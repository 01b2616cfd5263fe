"""Exception types shared across the package.

The split mirrors how failures are reported: usage errors are caller bugs
(bad arguments, wrong regime), data errors are malformed numerical inputs,
precondition errors are violated mathematical hypotheses, and resolution
errors mean the grid cannot represent the requested scale.
"""


class RieszLabError(Exception):
    """Base class for all package errors."""


class UsageError(RieszLabError, ValueError):
    """Invalid arguments or an operation called outside its regime."""


class DomainError(RieszLabError, ValueError):
    """Input outside the mathematical domain (e.g. kernel evaluated at 0)."""


class DataError(RieszLabError, ValueError):
    """Malformed numerical data (NaN symbol, mass mismatch, ...)."""


class PreconditionError(RieszLabError, ValueError):
    """A stated mathematical precondition does not hold (e.g. zero mean)."""


class ResolutionError(RieszLabError, ValueError):
    """The grid does not resolve the requested scale."""


class CollisionError(RieszLabError, RuntimeError):
    """Particle trajectory hit the collision floor.

    Carries the event time and the offending pair so drivers can emit a
    structured error record.
    """

    def __init__(self, time: float, pair: tuple[int, int], distance: float):
        self.time = float(time)
        self.pair = (int(pair[0]), int(pair[1]))
        self.distance = float(distance)
        super().__init__(
            f"collision at t={self.time:.6g}: particles {self.pair} "
            f"at distance {self.distance:.3g}"
        )
