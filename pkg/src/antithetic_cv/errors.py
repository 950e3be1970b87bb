"""Exception types raised by the estimators."""


class ContractViolation(ValueError):
    """A user-supplied predictor or learner returned output of the wrong shape."""


class UnsupportedOperation(TypeError):
    """The requested estimator needs a capability the predictor lacks."""


class LearnerFailure(RuntimeError):
    """A learner raised while fitting one fold of classic cross-validation."""

    def __init__(self, fold, cause):
        super().__init__(f"learner failed on fold {fold}: {cause!r}")
        self.fold = fold
        self.cause = cause


class SeparationError(RuntimeError):
    """Logistic maximum likelihood did not converge to a finite estimate.

    ``trace`` holds ``(iteration, |theta|, max |score|)`` per Newton step.
    """

    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)
