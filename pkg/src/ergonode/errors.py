"""Exception hierarchy shared by all modules."""


class ErgonodeError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(ErgonodeError, ValueError):
    """Invalid model or algorithm parameter."""


class AssumptionError(ParameterError):
    """Inputs violate the preconditions of a closed-form result."""


class InputError(ErgonodeError, ValueError):
    """Malformed matrix, graph or file contents."""


class EmptyInputError(InputError):
    pass


class DegenerateNodeError(ErgonodeError, ValueError):
    """A node with zero degree makes the random walk undefined."""


class ConnectivityError(ErgonodeError, ValueError):
    pass


class NumericalError(ErgonodeError, ArithmeticError):
    """An iterative routine failed to converge or produced non-finite values."""


class DivergenceError(NumericalError):
    pass
