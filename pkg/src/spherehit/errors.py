"""Exception types shared across the package."""


class SpherehitError(Exception):
    """Base class for numerical failures raised by this package."""


class TruncationError(SpherehitError):
    """A series did not converge within the allowed number of terms.

    Carries the last term index and the residual bound that was still
    above the requested tolerance.
    """

    def __init__(self, message, n_terms=None, residual=None):
        super().__init__(message)
        self.n_terms = n_terms
        self.residual = residual


class InversionError(SpherehitError):
    """Numerical Laplace inversion produced an untrustworthy value."""


class McConfigError(SpherehitError):
    """A Monte Carlo configuration cannot meet the requested accuracy."""
