"""Exception types raised by unicirc."""


class UnicircError(Exception):
    """Base class for all library errors."""


class InvalidParams(UnicircError, ValueError):
    """Morris integral parameters outside the convergent region."""


class DegenerateEnsemble(UnicircError, ValueError):
    """The eigenphase distribution has no density (e.g. SU(1): an atom at 0)."""


class TruncationFailure(UnicircError, ArithmeticError):
    """A Fourier series could not be truncated within the requested tolerance."""


class UnsupportedBeta(UnicircError, ValueError):
    """No matrix model is available for this Dyson index."""


class UnsupportedN(UnicircError, ValueError):
    """The requested size is not handled by this routine."""


class NotUnitary(UnicircError, ValueError):
    """An eigenvalue left the unit circle by more than the allowed tolerance."""


class PairingFailure(UnicircError, ValueError):
    """Eigenphases could not be grouped into Kramers pairs."""


class InsufficientSamples(UnicircError, ValueError):
    """Too few observations for the requested statistic."""
