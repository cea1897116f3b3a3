"""Exception types raised across the package.

Every error that crosses a module boundary derives from :class:`PharmonicError`
so callers (CLI, service) can map failures to exit codes / HTTP codes in one
place. Non-convergence is *not* an exception: solvers return
``converged=False`` explicitly.
"""


class PharmonicError(Exception):
    """Base class for all package errors."""


# graph construction
class GraphBuildError(PharmonicError):
    pass


class NonPositiveWeight(GraphBuildError):
    pass


class SelfLoop(GraphBuildError):
    pass


class DuplicateEdge(GraphBuildError):
    pass


class IdOutOfRange(GraphBuildError):
    pass


class XNotInSet(PharmonicError):
    pass


# solver / exponent
class InvalidExponent(PharmonicError):
    pass


class EmptyBoundary(PharmonicError):
    pass


class NonFiniteBoundary(PharmonicError):
    pass


class DisconnectedFreeComponent(PharmonicError):
    pass


# oracles
class TooManyFreeVertices(PharmonicError):
    pass


# lattice / windows
class SizeOverflow(PharmonicError):
    pass


class WindowTooSmall(PharmonicError):
    pass


# capacity / wiener
class ZeroDenominator(PharmonicError):
    pass


class ClosureEscapesU(PharmonicError):
    pass


class MonotonicityViolation(PharmonicError):
    pass


# massiveness
class SetsIntersect(PharmonicError):
    pass


class X0OutsideOmega(PharmonicError):
    pass


class Omega1NotSubset(PharmonicError):
    pass


# file formats
class FormatError(PharmonicError):
    pass
