"""Exception types shared across the toolkit."""


class NumericEvaluationError(ArithmeticError):
    """A special function or quadrature routine failed to produce a trustworthy value."""


class ConfigError(ValueError):
    """An experiment configuration could not be parsed or is inconsistent."""
