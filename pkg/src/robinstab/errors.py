"""Exception hierarchy.

Two families: ``ValidationError`` for bad inputs (CLI exit code 1) and
``NumericalError`` for failures during computation (CLI exit code 2).
"""


class RobinStabError(Exception):
    pass


class ValidationError(RobinStabError, ValueError):
    pass


class NumericalError(RobinStabError, ArithmeticError):
    pass


class BranchUnsupported(ValidationError):
    """Robin angles outside the cot(theta) > 0 branch."""


class RootScanExhausted(NumericalError):
    pass


class LiftingDegenerate(NumericalError):
    """cos(theta) + k sin(theta) vanishes for the requested lifting index."""


class PolesNotDistinct(ValidationError):
    pass


class PolesNotConjugateClosed(ValidationError):
    pass


class PlacementIllConditioned(NumericalError):
    pass


class ConstraintViolated(ValidationError):
    pass


class DelayOutOfBounds(ValidationError):
    pass


class NonFiniteState(NumericalError):
    pass


class ZeroNorm(NumericalError):
    def __init__(self, msg, kappa=float("inf")):
        super().__init__(msg)
        self.kappa = kappa


class ConfigError(ValidationError):
    pass
