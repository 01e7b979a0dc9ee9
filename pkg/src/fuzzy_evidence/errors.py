"""Exception types raised across the package."""


class SpecificationError(ValueError):
    """A model, rule base, or parameter vector is malformed."""


class ParameterDomainError(ValueError):
    """A parameter value lies outside its admissible domain."""


class InitializationError(RuntimeError):
    """No initial live point has a finite log-likelihood."""


class NonConvergenceError(RuntimeError):
    """A constrained draw exhausted its rejection budget."""


class NotConvergedError(RuntimeError):
    """An operation was given a run that did not reach its tolerance."""
