"""Exception types shared across the package."""


class CertificateError(Exception):
    """Base class for failures to produce a certificate."""


class ModeNotFound(CertificateError):
    """The likelihood or posterior has no interior maximum."""


class CurvatureError(CertificateError):
    """The negative Hessian at a mode is not positive definite."""


class InfeasibleRadius(CertificateError):
    """No radius satisfies the size and curvature conditions (n too small)."""


class AssumptionViolation(CertificateError):
    """A required assumption fails for the supplied constants."""


class OracleUnavailable(CertificateError):
    """A required analytic oracle or finite moment does not exist."""
