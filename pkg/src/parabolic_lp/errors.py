"""Exception hierarchy shared by every module of the package."""


class ParabolicLPError(Exception):
    """Base class for all package errors."""


class ValidationError(ParabolicLPError, ValueError):
    """Input rejected before any numerics ran (CLI exit code 2)."""


class NumericalError(ParabolicLPError, ArithmeticError):
    """A numerical construction failed its tolerance (CLI exit code 3)."""


class AdmissibilityError(ValidationError):
    pass


class DimensionError(ValidationError):
    pass


class NonPositiveScale(ValidationError):
    pass


class SideMismatch(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


class NonPositiveExponent(ValidationError):
    pass


class NonAdmissibleExponent(ValidationError):
    pass


class BaseTooSmall(ValidationError):
    pass


class WindowError(ValidationError):
    pass


class ProvenanceMismatch(ValidationError):
    pass


class EmptyRadii(ValidationError):
    pass


class MassError(ValidationError):
    pass


class DegenerateBall(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class CoverFailure(NumericalError):
    """No interval family achieves a positive lower bound at grid resolution."""


class PsiFloorError(NumericalError):
    pass


class DegenerateOrbit(NumericalError):
    pass


class ZeroQuasinorm(NumericalError):
    pass
