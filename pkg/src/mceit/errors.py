"""Exception types shared across the package."""


class DomainError(ValueError):
    """A physical parameter is outside the domain a formula is valid on."""


class DimensionError(ValueError):
    """Operator or state dimensions are invalid or inconsistent."""


class TruncationError(ValueError):
    """A requested state does not fit the Fock truncation.

    Carries the smallest truncation that would satisfy the safety bound.
    """

    def __init__(self, message: str, required_ncut: int):
        super().__init__(message)
        self.required_ncut = required_ncut


class SingularPhaseError(DomainError):
    """Flux phase too close to the half-quantum point for an asymmetric SQUID."""


class PoleGuardError(DomainError):
    """Modulation frequency too close to the mechanical frequency."""


class StepSizeError(ValueError):
    """Fixed integration step too coarse for the requested dynamics."""


class NanAbortError(RuntimeError):
    """Integration produced non-finite values; carries diagnostics."""

    def __init__(self, message: str, t: float, step: int):
        super().__init__(message)
        self.t = t
        self.step = step


class UndefinedResponseError(ValueError):
    """A response quantity is requested where it is not defined."""


class ConfigError(ValueError):
    """Configuration document rejected; carries a line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
