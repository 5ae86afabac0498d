"""Exception types shared across the toolkit.

Validation problems derive from ValueError so callers can catch broadly;
iterative-solver failures derive from RuntimeError and carry the last
iterate where that is useful for post-mortems.
"""


class InvalidParameterError(ValueError):
    """A scalar parameter is outside its legal domain (df = 0, p not in (0,1), scale <= 0, ...)."""


class InvalidInputError(ValueError):
    """Input data violate a precondition (empty vector, non-binary labels, domain violation)."""


class ShapeMismatchError(ValueError):
    """Paired inputs disagree in length/shape."""


class InsufficientDataError(ValueError):
    """Too few observations for the requested operation."""


class DegenerateDesignError(ValueError):
    """Constant predictions: the slope of the lifted fit is undefined."""


class UndefinedLcdError(ValueError):
    """Null-model loss is zero, so the loss ratio is undefined."""


class BoundaryNullError(ValueError):
    """Intercept-only MLE sits on the parameter boundary (e.g. all-one labels under the logit link)."""


class NonConvergenceError(RuntimeError):
    """Iteration cap reached before the stopping rule fired.

    The ``solution`` attribute holds the last iterate.
    """

    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


class TuningFailureError(RuntimeError):
    """Sampler step-size adaptation failed (acceptance rate collapsed)."""


class ModelUnsuitableError(RuntimeError):
    """Every point is flagged as an outlier at every penalty level: the test set is corrupted or the model does not generalise."""


class InsufficientSamplesError(ValueError):
    """Chain too short for the requested quantile."""
