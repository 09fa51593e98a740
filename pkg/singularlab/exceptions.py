class SingularLabError(Exception):
    """Base class for every domain error raised by singularlab."""

    code = "SINGULARLAB_ERROR"
    exit_code = 1
    http_status = 400

    def __init__(self, detail: str = ""):
        super().__init__(detail or self.code)
        self.detail = detail or self.code

    def to_dict(self) -> dict:
        return {"code": self.code, "detail": self.detail}


class InputError(SingularLabError):
    """Malformed scalar, matrix, config key or violated precondition."""
    code = "INPUT_ERROR"
    http_status = 422


class NumericDomainError(SingularLabError):
    code = "NUMERIC_DOMAIN"


class UndecidableComparison(SingularLabError):
    """Raised when error bounds of a high-precision value straddle the decision boundary."""
    code = "UNDECIDABLE_COMPARISON"


class GradeOverflow(SingularLabError):
    code = "GRADE_OVERFLOW"


class DimensionTooLarge(SingularLabError):
    code = "DIMENSION_TOO_LARGE"
    exit_code = 2
    http_status = 413


class BoxOverflow(SingularLabError):
    code = "BOX_OVERFLOW"
    exit_code = 2
    http_status = 413


class RationalDegenerate(SingularLabError):
    """An exact zero error made the uniform exponent infinite at the horizon."""
    code = "RATIONAL_DEGENERATE"

    def __init__(self, detail: str = "", estimates: list | None = None):
        super().__init__(detail)
        self.estimates = estimates or []


class SingularB(SingularLabError):
    code = "SINGULAR_B"


class CertificateInvalid(SingularLabError):
    code = "CERTIFICATE_INVALID"


class NotApplicable(SingularLabError):
    code = "NOT_APPLICABLE"


class HorizonMismatch(SingularLabError):
    code = "HORIZON_MISMATCH"
