"""Error hierarchy shared by every fsac module.

Input problems derive from ``FsacInputError`` (exit code 2 on the command line),
numerical failures from ``EstimationError`` (exit code 3).
"""

from __future__ import annotations


class FsacError(Exception):
    """Base class for all fsac errors."""


class FsacInputError(FsacError, ValueError):
    """Invalid user input: files, dimensions, parameter values."""


class EstimationError(FsacError, ArithmeticError):
    """A numerical step could not be carried out."""


class InputFileError(FsacInputError):
    """A file could not be read or parsed."""

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        location = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{location}: {message}")


class EmptyGraph(FsacInputError):
    pass


class IndexOutOfRange(FsacInputError):
    pass


class InvalidLattice(FsacInputError):
    pass


class InvalidWeights(FsacInputError):
    pass


class LengthMismatch(FsacInputError):
    pass


class GridMismatch(FsacInputError):
    pass


class InvalidBasisCount(FsacInputError):
    pass


class InvalidComponentCount(FsacInputError):
    pass


class ConstantInput(FsacInputError):
    pass


class RankDeficientDesign(EstimationError):
    pass


class DegenerateComponent(EstimationError):
    """The FPLS cross-covariance function vanished and cannot be normalized."""

    def __init__(self, step: int, norm: float):
        self.step = step
        self.norm = norm
        super().__init__(f"cross-covariance norm {norm:.3e} at FPLS step {step}")


class ScoreCollapse(EstimationError):
    def __init__(self, step: int, sum_sq: float):
        self.step = step
        self.sum_sq = sum_sq
        super().__init__(f"score sum of squares {sum_sq:.3e} at FPLS step {step}")


class SingularShift(EstimationError):
    pass


class SingularInformation(EstimationError):
    pass


class DegenerateVariance(EstimationError):
    pass


class OptimizerFailure(EstimationError):
    pass


class IsolatedUnitWarning(UserWarning):
    """Some spatial units have no neighbours; their weight rows stay zero."""
