from typing import Iterable, Optional


class SphericRadialError(Exception):
    """Base error; `exit_code` is what the CLI returns for it."""

    exit_code = 1


class InputError(SphericRadialError):
    exit_code = 3


class ConfigError(InputError):
    pass


class ProblemError(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotPositiveDefinite(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message: str, offset: int, expected: Optional[Iterable[str]] = None):
        self.offset = offset
        self.expected = tuple(sorted(expected or ()))
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownIdentifier(InputError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"Unknown identifier '{name}' at offset {offset}")


class SlaterViolation(SphericRadialError):
    exit_code = 2

    def __init__(self, value: float, component: Optional[int] = None):
        self.value = value
        self.component = component
        where = f" (component {component})" if component is not None else ""
        super().__init__(
            f"Slater condition violated: g(x,0) = {value:.6g} >= 0{where}; "
            f"the origin must be strictly feasible"
        )


class NumericalError(SphericRadialError):
    pass


class DomainError(NumericalError):
    pass


class NegativeArgument(NumericalError, ValueError):
    pass


class OutOfRange(NumericalError, ValueError):
    pass


class NonConvexityDetected(NumericalError):
    pass


class DegenerateDenominator(NumericalError):
    pass


class NonSmoothComponent(NumericalError):
    pass


class QuadratureFailure(NumericalError):
    pass
