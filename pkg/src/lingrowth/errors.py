"""Exception hierarchy shared by all modules."""


class LinGrowthError(Exception):
    """Base class for every error raised by this package."""


# calculus
class NonFiniteEvaluation(LinGrowthError):
    pass


class ToleranceNotMet(LinGrowthError):
    def __init__(self, message, value=None, abs_error=None):
        super().__init__(message)
        self.value = value
        self.abs_error = abs_error


class BracketInvalid(LinGrowthError):
    pass


# integrand
class InvalidParameter(LinGrowthError):
    pass


class NotStrictlyConvex(LinGrowthError):
    pass


class NotLinearGrowth(LinGrowthError):
    pass


# radial
class InconsistentWithCriterion(LinGrowthError):
    pass


class CriterionDiverges(LinGrowthError):
    pass


# barrier
class CriterionConverges(LinGrowthError):
    pass


class DegenerateGradient(LinGrowthError):
    pass


class NotFound(LinGrowthError):
    pass


class BudgetExhausted(LinGrowthError):
    def __init__(self, message, achieved=None, delta=None):
        super().__init__(message)
        self.achieved = achieved
        self.delta = delta


# solver
class MeshTooCoarse(LinGrowthError):
    pass


class NewtonStalled(LinGrowthError):
    pass


class ConfigError(LinGrowthError):
    pass
