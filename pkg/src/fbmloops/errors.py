"""Exception hierarchy shared across the package."""


class FbmLoopsError(Exception):
    """Base class for all package errors."""


class DomainError(FbmLoopsError, ValueError):
    """An argument lies outside the domain of the operation."""


class ResourceError(FbmLoopsError, MemoryError):
    """A request would exceed the configured memory bound."""


class NumericError(FbmLoopsError, ArithmeticError):
    """A numerical routine failed (non-convergence, overflow, ...)."""


class KernelNotPDError(NumericError):
    """Covariance matrix is not positive semidefinite.

    Attributes
    ----------
    min_eigenvalue : float
        Smallest eigenvalue of the offending matrix.
    """

    def __init__(self, message, min_eigenvalue=float("nan")):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class EmbeddingError(NumericError):
    """Circulant spectrum has significantly negative eigenvalues."""


class DivergenceError(NumericError):
    """Requested quantity is infinite for the given parameters."""


class FormatError(FbmLoopsError, ValueError):
    """Malformed or incompatible file."""
