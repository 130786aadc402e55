"""Exception types shared across the workbench modules."""


class WorkbenchError(Exception):
    """Base class for all acfbench errors."""


# -- convex geometry ---------------------------------------------------------

class PointNotOnBoundary(WorkbenchError):
    pass


class DegenerateRadius(WorkbenchError):
    pass


class WrongVariant(WorkbenchError):
    pass


class EmptyGrid(WorkbenchError):
    pass


class EmptySlice(WorkbenchError):
    pass


class NotGraphRegular(WorkbenchError):
    pass


class NotConvex(WorkbenchError):
    pass


# -- scale ladder / counterexample ------------------------------------------

class BadAlpha(WorkbenchError):
    pass


class LadderEmpty(WorkbenchError):
    pass


class OutOfLadder(WorkbenchError):
    pass


class GridTooCoarse(WorkbenchError):
    pass


# -- spectral ----------------------------------------------------------------

class NoDirichletPart(WorkbenchError):
    pass


class NegativeEigenvalue(WorkbenchError):
    pass


class MeshFailure(WorkbenchError):
    pass


class NoDirichletNodes(WorkbenchError):
    pass


class NotConvexDomain(WorkbenchError):
    pass


class BadNesting(WorkbenchError):
    pass


# -- solver ------------------------------------------------------------------

class NonConvergence(WorkbenchError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class NoFreeBoundary(WorkbenchError):
    pass


# -- ACF functional -----------------------------------------------------------

class BallOutsideField(WorkbenchError):
    pass


class DegenerateDenominator(WorkbenchError):
    pass


# -- configuration -------------------------------------------------------------

class ConfigError(WorkbenchError):
    pass
