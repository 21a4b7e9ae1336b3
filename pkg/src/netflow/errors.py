"""Exception hierarchy.

Every error raised deliberately by the library derives from :class:`NetflowError`.
The command line maps these to exit code 1 (domain error).
"""


class NetflowError(Exception):
    """Base class for all domain errors raised by netflow."""


class TopologyError(NetflowError):
    """The abstract graph violates the degree, connectivity or loop rules."""


class TopologyMismatch(NetflowError):
    """Two networks that must share a topology do not."""


class ConcurrencyViolation(NetflowError):
    """Samples that should meet at a junction are too far apart."""


class DegenerateSegment(NetflowError):
    """A discrete curve has two consecutive coincident samples."""


class NotAClosedWalk(NetflowError):
    """An edge cycle does not close up in the topology."""


class EdgeCollapse(NetflowError):
    """An edge became shorter than the collapse floor."""

    def __init__(self, message: str, edge: str | None = None):
        super().__init__(message)
        self.edge = edge


class NoConvergence(NetflowError):
    """An iterative method hit its iteration cap."""


class NewtonFailure(NetflowError):
    """A Newton iteration did not reach its tolerance."""


class PreconditionViolation(NetflowError):
    """An input lies outside the region where an operation is defined."""


class ConstraintViolation(NetflowError):
    """Linear junction or endpoint constraints are not satisfied."""


class OutOfTrustRegion(NetflowError):
    """The target network is too far from the base to be written as a graph."""


class GapNonPositive(NetflowError):
    """The energy gap vanishes or is negative on the analyzed window."""


class GeometryInfeasible(NetflowError):
    """Requested example geometry cannot be realized."""


class NotAGraph(NetflowError):
    """A curve is not a graph over the requested axis."""


class TimeOrder(NetflowError):
    """A time argument is not strictly before the reference time."""


class FormatError(NetflowError):
    """A file does not follow the expected format."""
