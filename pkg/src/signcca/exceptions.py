"""Exception and warning types shared across the package."""


class NotPositiveDefiniteError(ValueError):
    """A matrix that must be positive-definite failed its factorization check."""


class DegenerateFitError(RuntimeError):
    """The penalized CCA solver collapsed to an all-zero direction on one side."""

    def __init__(self, side: int, detail: str = ""):
        self.side = side
        msg = f"degenerate fit: direction for side {side} is zero at every penalty level"
        if detail:
            msg = f"{msg} ({detail})"
        super().__init__(msg)


class MetricUndefinedError(ValueError):
    """An evaluation metric was requested for inputs where it is undefined."""


class DataError(ValueError):
    """An input data file is malformed: parse failures, missing values, bad shape."""


class SpecError(ValueError):
    """An experiment or CLI specification is invalid."""


class ConvergenceWarning(RuntimeWarning):
    """An iterative routine stopped at its iteration cap before reaching tolerance."""
