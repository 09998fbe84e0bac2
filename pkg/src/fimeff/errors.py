"""Exception hierarchy shared by every fimeff module."""


class FimEffError(ValueError):
    """Base class for all library errors."""


class InputError(FimEffError):
    """Malformed or out-of-domain input."""


class PreconditionError(InputError):
    """A documented precondition of an operation was violated."""


class ParseError(InputError):
    """An embedding file could not be parsed.

    ``location`` is a human readable position (``line 4`` or ``byte 24``).
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{message} (at {location})"
        super().__init__(message)


class NotPSDError(FimEffError):
    """Matrix has an eigenvalue meaningfully below zero."""


class DegenerateSpectrumError(FimEffError):
    """Spectrum has zero total mass, so ratios over it are undefined."""


class DegenerateColumnError(FimEffError):
    """A representation dimension has (numerically) zero batch variance."""

    def __init__(self, dim, view="A"):
        self.dim = dim
        self.view = view
        super().__init__(
            f"dimension {dim} of view {view} has zero batch variance "
            "(collapsed representation)"
        )


class DivergenceError(FimEffError):
    """Training blew up (loss stuck far above its starting value or non-finite)."""


class ConvergenceError(FimEffError):
    """Jacobi sweeps did not reach the off-diagonal tolerance."""
