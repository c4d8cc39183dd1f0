"""Exception hierarchy shared by all modules."""


class WaveGeoError(Exception):
    """Base class for every error raised by this package."""


class MeshError(WaveGeoError):
    pass


class ParseError(MeshError):
    pass


class NonManifoldError(MeshError):
    pass


class NonTriangleError(MeshError):
    pass


class DegenerateFaceError(MeshError):
    pass


class IsolatedVertexError(MeshError):
    pass


class InvalidVertexError(MeshError, IndexError):
    pass


class DisconnectedMeshError(MeshError):
    pass


class NotASphereError(MeshError):
    pass


class LinalgError(WaveGeoError):
    pass


class IndexOutOfRangeError(LinalgError, IndexError):
    pass


class AsymmetricInputError(LinalgError):
    pass


class NotPositiveDefiniteError(LinalgError):
    pass


class DimensionMismatchError(LinalgError, ValueError):
    pass


class SingularSystemError(LinalgError):
    """A per-face 2x2 Gram system could not be solved."""


class PropagationError(WaveGeoError):
    pass


class PropagationDivergedError(PropagationError):
    pass


class IncompleteCoverageError(PropagationError):
    """Raised in strict mode when the iteration cap is hit before coverage.

    The partially recorded field is attached as ``field``.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SourceMismatchError(WaveGeoError, ValueError):
    pass


class MissingReferenceError(WaveGeoError):
    pass
