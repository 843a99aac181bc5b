"""Exception and warning types."""


class SeriesTooShortError(ValueError):
    """The series has too few samples for the requested scales."""


class IllConditionedCovarianceError(ValueError):
    """The between-scale covariance estimate cannot be inverted reliably."""


class DegenerateInputWarning(UserWarning):
    """Statistics were computed from a degenerate (e.g. constant) input."""


class EmbeddingWarning(UserWarning):
    """Circulant embedding produced negative eigenvalues that were clipped."""
