"""Exception hierarchy shared across the pipeline."""


class WingFeaError(Exception):
    """Base class for all pipeline errors."""

    retryable = False


# spec compilation
class SchemaError(WingFeaError):
    pass


class UnitError(WingFeaError):
    pass


class ParseError(WingFeaError):
    pass


class RangeError(WingFeaError):
    pass


class CapacityError(WingFeaError):
    pass


# knowledge base
class EmptyKbError(WingFeaError):
    pass


class NoMatchError(WingFeaError):
    pass


# geometry
class CodeError(WingFeaError):
    pass


class SamplingError(WingFeaError):
    pass


class GeometryError(WingFeaError):
    pass


class UnknownLocationError(WingFeaError):
    pass


# meshing
class ResolutionError(WingFeaError):
    retryable = True


class MeshQualityError(WingFeaError):
    retryable = True


class EmptyMeshError(WingFeaError):
    pass


# solver
class EmptySetError(WingFeaError):
    pass


class SingularSystemError(WingFeaError):
    pass


class NonConvergenceError(WingFeaError):
    retryable = True

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


# orchestration / analysis
class InsufficientMemoryError(WingFeaError):
    pass


class NoDataError(WingFeaError):
    pass


class DegenerateError(WingFeaError):
    pass
