"""Exception types raised across the package."""


class SpectralGCNError(Exception):
    """Base class for all package errors."""


class ShapeError(SpectralGCNError, ValueError):
    pass


class InvalidMatrix(SpectralGCNError, ValueError):
    pass


class InvalidParameter(SpectralGCNError, ValueError):
    pass


class IsolatedNode(SpectralGCNError, ValueError):
    def __init__(self, index, message=None):
        self.index = int(index)
        super().__init__(message or f"node {self.index} has nonpositive degree")


class ConvergenceFailure(SpectralGCNError, RuntimeError):
    def __init__(self, message, residuals=None):
        self.residuals = residuals
        super().__init__(message)


class InsufficientRank(SpectralGCNError, ValueError):
    def __init__(self, requested, available, message=None):
        self.requested = int(requested)
        self.available = int(available)
        super().__init__(
            message
            or f"requested {self.requested} eigenpairs but only {self.available} are available"
        )


class DenseCapExceeded(SpectralGCNError, MemoryError):
    pass


class DivergedRun(SpectralGCNError, FloatingPointError):
    def __init__(self, iteration, message=None):
        self.iteration = int(iteration)
        super().__init__(message or f"non-finite loss at iteration {self.iteration}")


class InvalidDataset(SpectralGCNError, ValueError):
    pass


class ParseError(SpectralGCNError, ValueError):
    def __init__(self, line, message):
        self.line = int(line)
        super().__init__(f"line {self.line}: {message}")


class MissingValue(SpectralGCNError, ValueError):
    def __init__(self, line, column):
        self.line = int(line)
        self.column = int(column)
        super().__init__(f"line {self.line}: missing value in column {self.column}")
