"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(ValueError):
    """A matrix that must be invertible has zero determinant."""


class NotIntegralError(ValueError):
    """An operation that needs integer entries got a proper fraction."""


class NotPerfectError(ValueError):
    """The symplectic form is not unimodular."""

    def __init__(self, det):
        super().__init__(f"form is not perfect: det = {det}")
        self.det = det


class NotSymmetricPositiveError(ValueError):
    """Ring element is not symmetric positive definite."""


class NotInSiegelSpaceError(ValueError):
    """A complex matrix fails symmetry or positive-definite imaginary part."""


class SingularActionError(ValueError):
    """CZ + D is singular (or too badly conditioned) at the working precision."""


class PrecisionExhaustedError(ArithmeticError):
    """Running error estimate ate more than a quarter of the working precision."""


class ReductionFailedError(RuntimeError):
    """Fundamental-domain reduction hit its iteration cap."""


class CertificateViolation(AssertionError):
    """A certified height bound was exceeded.

    Every bound we check is a theorem, so this always means a bug. It derives
    from AssertionError on purpose and must never be caught and ignored.
    """
