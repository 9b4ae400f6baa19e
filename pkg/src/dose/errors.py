"""Exception types shared across the toolkit.

Every contract violation raises a subclass of :class:`DoseError` so the CLI
can map them to exit code 2 (input/contract error) while genuine bugs
propagate as ordinary exceptions (exit code 1).
"""


class DoseError(Exception):
    """Base class for all input and contract errors."""


class MissingManifest(DoseError):
    pass


class DuplicateSampleId(DoseError):
    pass


class NonFiniteValue(DoseError):
    def __init__(self, row, col, message=None):
        self.row = row
        self.col = col
        super().__init__(message or f"non-finite value at row {row!r}, column {col!r}")


class SchemaMismatch(DoseError):
    pass


class RoleMismatch(DoseError):
    pass


class TableTooSmall(DoseError):
    pass


class UnknownStatistic(DoseError):
    pass


class UnknownModel(DoseError):
    pass


class DegenerateStatistic(DoseError):
    def __init__(self, statistic, message=None):
        self.statistic = statistic
        super().__init__(message or f"statistic {statistic!r} has zero spread; bandwidth would be 0")


class NonPositiveBandwidth(DoseError):
    pass


class DimensionMismatch(DoseError):
    pass


class RankDeficient(DoseError):
    def __init__(self, directions, message=None):
        self.directions = list(directions)
        super().__init__(message or f"covariance is rank deficient along directions {self.directions}")


class SolverNonConvergence(DoseError):
    pass


class NeedsEnsemble(DoseError):
    pass


class EmptyScores(DoseError):
    pass


class OrientationMismatch(DoseError):
    pass


class BadBinCount(DoseError):
    pass


class BadWindowing(DoseError):
    pass


class EmptyEvaluationSet(DoseError):
    pass


class OutOfSupport(DoseError):
    pass


class BadParams(DoseError):
    pass
