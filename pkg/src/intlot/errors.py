"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command line front end.
"""


class IntlotError(Exception):
    exit_code = 2


class InputError(IntlotError):
    """Malformed input file, literal or option."""


# numeric tower
class MixedModeError(IntlotError):
    pass


class NonlinearError(IntlotError):
    """Product of two values that both carry irrational parts."""


class PrecisionExhausted(IntlotError):
    exit_code = 4


class UnknownConstant(IntlotError):
    pass


# market model
class ModelError(IntlotError):
    pass


class DimensionMismatch(ModelError):
    pass


class NotAdapted(ModelError):
    pass


class TerminalMismatch(ModelError):
    pass


class NotOnePeriod(ModelError):
    pass


class NotMartingaleMeasure(ModelError):
    pass


# optimization / search
class ExactModeError(IntlotError):
    """Exact simplex asked to pivot on non-rational data."""


class NumericalBreakdown(IntlotError):
    exit_code = 5


class BudgetExceeded(IntlotError):
    exit_code = 4


class SearchFailed(IntlotError):
    exit_code = 5


class DependentGenerators(IntlotError):
    pass


# analysis preconditions
class ModelHasArbitrage(IntlotError):
    exit_code = 3


class ModelHasIntegerArbitrage(IntlotError):
    exit_code = 3


class InvariantViolation(IntlotError):
    exit_code = 5
