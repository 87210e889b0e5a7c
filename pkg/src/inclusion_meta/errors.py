"""Exception hierarchy shared by the library and the command line front end.

Every exception carries an ``exit_code`` so the CLI can map failures onto
its documented exit statuses without a lookup table.
"""

__all__ = [
    "InclusionError",
    "ModelParseError",
    "ModelValidationError",
    "DetailedBalanceViolation",
    "NotIrreducible",
    "SelfLoopRejected",
    "Unreachable",
    "StateSpaceTooLarge",
    "NumericalError",
    "SolveDiverged",
    "DivisionByZeroRate",
    "TrivialFlow",
    "TrivialFlowForPartition",
    "ChannelUndefined",
    "ConditionViolated",
    "RatioNotContracting",
    "InconsistentCapacities",
    "BracketViolation",
    "DiffusionScheduleWarning",
]


class InclusionError(Exception):
    """Base class for all library errors."""

    exit_code = 3


class ModelParseError(InclusionError):
    """A model file could not be read or parsed.

    Parameters
    ----------
    message : str
        Human readable description.
    key : str, optional
        Offending key of the model file.
    line : int, optional
        1-based line number in the model file, when known.
    """

    exit_code = 1

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ModelValidationError(InclusionError):
    """The site graph violates a structural requirement."""

    exit_code = 2

    def as_dict(self):
        return {"error": type(self).__name__, "message": str(self)}


class DetailedBalanceViolation(ModelValidationError):
    def __init__(self, x, y, residual):
        self.x, self.y, self.residual = x, y, float(residual)
        super().__init__(
            f"m({x})r({x},{y}) != m({y})r({y},{x}); relative residual {self.residual:.3e}"
        )

    def as_dict(self):
        d = super().as_dict()
        d.update(x=self.x, y=self.y, residual=self.residual)
        return d


class NotIrreducible(ModelValidationError):
    def __init__(self, reachable, unreachable):
        self.reachable = list(reachable)
        self.unreachable = list(unreachable)
        super().__init__(
            f"walk is not irreducible: {self.unreachable} cannot be reached from {self.reachable}"
        )

    def as_dict(self):
        d = super().as_dict()
        d.update(reachable=self.reachable, unreachable=self.unreachable)
        return d


class SelfLoopRejected(ModelValidationError):
    def __init__(self, x, value):
        self.x, self.value = x, float(value)
        super().__init__(f"self-loop rate r({x},{x})={value} is not allowed")

    def as_dict(self):
        d = super().as_dict()
        d.update(site=self.x, value=self.value)
        return d


class Unreachable(ModelValidationError):
    pass


class StateSpaceTooLarge(InclusionError):
    exit_code = 3

    def __init__(self, count, cap):
        self.count, self.cap = int(count), int(cap)
        super().__init__(f"{self.count} configurations exceed the cap {self.cap}")


class NumericalError(InclusionError):
    exit_code = 3


class SolveDiverged(NumericalError):
    def __init__(self, iterations, residual):
        self.iterations, self.residual = int(iterations), float(residual)
        super().__init__(
            f"linear solve failed after {self.iterations} iterations (residual {self.residual:.3e})"
        )


class DivisionByZeroRate(NumericalError):
    pass


class TrivialFlow(NumericalError):
    pass


class TrivialFlowForPartition(TrivialFlow):
    pass


class ChannelUndefined(NumericalError):
    pass


class ConditionViolated(ModelValidationError):
    pass


class RatioNotContracting(ModelValidationError):
    pass


class InconsistentCapacities(NumericalError):
    pass


class BracketViolation(NumericalError):
    pass


class DiffusionScheduleWarning(UserWarning):
    """Advisory warning about the diffusion parameter schedule."""
