from typing import Optional


class MicrogenException(Exception):
    """
    Base exception.
    """

    category = "error"
    exit_code = 1


class DomainError(MicrogenException, ValueError):
    """
    An input is outside the domain of the model, or a precondition
    of an operation does not hold.
    """

    category = "domain"
    exit_code = 2


class SingularityError(DomainError):
    """
    The closed-form field is singular at the requested point.
    """


class PreconditionError(DomainError):
    """
    A numerical precondition, such as monotonicity of a design
    variable, was checked and does not hold.
    """


class DeviceFileError(MicrogenException):
    """
    A device or measurement file failed to parse or validate.
    """

    category = "parse"
    exit_code = 2

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = []
        if line is not None:
            location.append(f"line {line}")
        if key is not None:
            location.append(f"key '{key}'")

        if location:
            message = f"{message} ({', '.join(location)})"

        super().__init__(message)


class InfeasibleDesignError(MicrogenException):
    """
    No design satisfying the requested target or constraints exists
    within the given bounds.
    """

    category = "infeasible"
    exit_code = 3

    def __init__(self, message: str, evaluations: Optional[dict] = None):
        self.evaluations = evaluations or {}
        super().__init__(message)


class NumericalError(MicrogenException, ArithmeticError):
    """
    A numerical method failed to converge or became unstable.
    """

    category = "numerical"
    exit_code = 4

    def __init__(
        self,
        message: str,
        estimate: Optional[float] = None,
        error_bound: Optional[float] = None,
    ):
        self.estimate = estimate
        self.error_bound = error_bound
        if estimate is not None:
            message = f"{message} (estimate={estimate:.6g}"
            if error_bound is not None:
                message = f"{message}, error bound={error_bound:.3g}"

            message = f"{message})"

        super().__init__(message)
