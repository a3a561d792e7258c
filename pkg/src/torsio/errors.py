"""Exception hierarchy shared by all torsio modules."""


class TorsioError(Exception):
    """Base class for every error raised by the library."""


# triangulation
class NonManifold(TorsioError):
    pass


class NonOrientable(TorsioError):
    pass


class Degenerate(TorsioError):
    pass


class NotApplicable(TorsioError):
    pass


class UnknownName(TorsioError):
    pass


# geometry
class GeneralPositionFailure(TorsioError):
    pass


class DegenerateTetrahedron(TorsioError):
    pass


class ZeroLength(TorsioError):
    pass


# rigidity / complex
class RankDeficient(TorsioError):
    pass


class MissingInnerVertices(TorsioError):
    pass


class DegenerateGeometry(TorsioError):
    pass


class SingularPlanMinor(TorsioError):
    pass


class EdgeNotEligible(TorsioError):
    pass


# grassmann
class RegistryMismatch(TorsioError):
    pass


class OddInput(TorsioError):
    pass


class ShapeMismatch(TorsioError):
    pass


class OddGeneratorCount(TorsioError):
    pass


# gluing
class IncompatibleBoundary(TorsioError):
    pass


class PlacementMismatch(TorsioError):
    pass
