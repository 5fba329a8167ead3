# services/errors.py
from typing import Optional

# --- Custom Exceptions ---

class TlpaError(Exception):
    """Base class for errors raised by the threshold-selection library.

    `exit_code` is the process exit status the CLI uses when the error reaches it.
    """
    exit_code = 3

    def __init__(self, message, original_exception=None):
        super().__init__(message)
        self.message = message
        self.original_exception = original_exception

class TlpaInputError(TlpaError, ValueError):
    """Invalid parameters, ranks or configuration handed to a library function."""
    exit_code = 2

class SupportError(TlpaInputError):
    """A density, CDF or quantile was evaluated outside its domain."""
    def __init__(self, message, value=None, original_exception=None):
        super().__init__(message, original_exception)
        self.value = value

class DatasetError(TlpaInputError):
    """Error reading or interpreting an input data file."""
    def __init__(self, message, path=None, row=None, original_exception=None):
        super().__init__(message, original_exception)
        self.path = path
        self.row = row

class TlpaNumericError(TlpaError, ArithmeticError):
    """A computation could not produce a finite, meaningful number."""
    exit_code = 3

class InsufficientTailError(TlpaNumericError):
    """Fewer strict exceedances above the threshold than an excess model needs."""
    def __init__(self, message="insufficient tail", rank=None, n_exceed=None, original_exception=None):
        super().__init__(message, original_exception)
        self.rank = rank
        self.n_exceed = n_exceed

class DegenerateExcessError(TlpaNumericError):
    """1 - y^(-2*gamma) underflowed for some excess, so log(1 - y^(-2*gamma)) is unusable."""
    def __init__(self, message="degenerate excess", gamma=None, original_exception=None):
        super().__init__(message, original_exception)
        self.gamma = gamma

class MeanUndefinedError(TlpaNumericError):
    """A moment was requested from a distribution for which it diverges."""
    def __init__(self, message="mean undefined", shape=None, original_exception=None):
        super().__init__(message, original_exception)
        self.shape = shape

class NoFeasibleGridPointError(TlpaNumericError):
    """Every point of a selection grid failed to evaluate."""
    def __init__(self, message="no feasible grid point", n_points=None, original_exception=None):
        super().__init__(message, original_exception)
        self.n_points = n_points

class ExperimentError(TlpaError):
    """Too many repetitions of a Monte Carlo experiment failed."""
    def __init__(self, message, n_failed: Optional[int] = None, repetitions: Optional[int] = None,
                 original_exception=None):
        super().__init__(message, original_exception)
        self.n_failed = n_failed
        self.repetitions = repetitions
