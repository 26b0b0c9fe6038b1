"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class CalibrationError(RuntimeError):
    """Noise calibration could not reach the requested coherence times.

    ``best`` holds the closest parameter pair found and ``achieved`` the
    (FID, Hahn) 1/e times it produces.
    """

    def __init__(self, message, best=None, achieved=None):
        super().__init__(message)
        self.best = best
        self.achieved = achieved


class FitError(RuntimeError):
    """A least-squares fit failed to converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
