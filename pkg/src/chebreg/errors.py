"""Exception and warning types raised across the package."""


class ChebregError(Exception):
    """Base class for all package errors."""


class NonConvergence(ChebregError):
    """Adaptive construction hit the degree ceiling without tail decay."""


class NonFinite(ChebregError, ValueError):
    """A sampled function returned NaN or infinity."""


class OutOfDomain(ChebregError, ValueError):
    """Evaluation point lies outside the function's interval."""


class DomainMismatch(ChebregError, ValueError):
    """Two operands live on different intervals."""


class RankOverflow(ChebregError):
    """Cross approximation reached ``max_rank`` before its tolerance."""


class EmptyExpansion(ChebregError):
    """No singular value survived the cut-off."""


class OutOfRange(ChebregError, IndexError):
    """Truncation index or rank argument outside the admissible range."""


class ZeroExactNorm(ChebregError, ZeroDivisionError):
    """Relative error requested against an exact solution of norm zero."""


class ZeroNoiseNorm(ChebregError, ZeroDivisionError):
    """A generated noise function has zero norm and cannot be rescaled."""


class UnknownProblem(ChebregError, KeyError):
    """Requested test problem name is not registered."""


class ConfigError(ChebregError, ValueError):
    """Invalid experiment configuration."""


class UnattainableDiscrepancy(UserWarning):
    """The discrepancy level cannot be met; a boundary parameter was returned."""
