"""Exception hierarchy.

The CLI maps :class:`DataError` to exit code 2 and :class:`NumericalError`
to exit code 3.
"""


class ReprselError(Exception):
    """Base class for all package errors."""


class DataError(ReprselError, ValueError):
    """Malformed or invalid input data."""


class AsymmetricKernelError(DataError):
    def __init__(self, max_violation, message=None):
        self.max_violation = float(max_violation)
        super().__init__(
            message
            or f"kernel matrix is not symmetric: max |k_ij - k_ji| = {self.max_violation:.6g}"
        )


class NumericalError(ReprselError, ArithmeticError):
    """A numerical precondition failed (e.g. a factorization)."""


class NotPSDError(NumericalError):
    def __init__(self, min_eigenvalue, tol):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"kernel block is not positive semidefinite (min eigenvalue "
            f"{self.min_eigenvalue:.6g} < -{tol:.3g}); run psd_repair on the kernel first"
        )
