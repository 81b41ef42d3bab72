class InterdepError(Exception):
    """Base class for all errors raised by this package."""


class InputError(InterdepError, ValueError):
    """Malformed data: non-finite values, wrong shapes, rank deficiency."""


class ParameterError(InterdepError, ValueError):
    """A configuration value lies outside its admissible range."""


class DomainError(InterdepError, ValueError):
    """A function was evaluated outside its domain of definition."""


class ModelError(InterdepError):
    """The structural model is not admissible, e.g. (I - rho W) is near singular."""


class NumericError(InterdepError, ArithmeticError):
    """An iterative or factorization routine failed."""


class ExperimentError(InterdepError):
    """A Monte Carlo experiment produced no usable replications."""
