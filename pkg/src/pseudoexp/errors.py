"""Exception hierarchy shared by all modules."""


class PseudoExpError(Exception):
    """Base class for every error raised by this package."""


class DomainError(PseudoExpError, ValueError):
    """An argument lies outside the support of a density or kernel."""


class ConstraintError(PseudoExpError, ValueError):
    """Parameters violate the constraints of the selected model variant or prior."""


class MomentError(PseudoExpError, ValueError):
    """A requested moment does not exist for the given parameters."""


class ProprietyError(PseudoExpError, ValueError):
    """The posterior implied by an improper prior is itself improper."""


class ConvergenceError(PseudoExpError, RuntimeError):
    """A numerical routine did not reach its tolerance within its budget."""


class IncompatibleMethodError(PseudoExpError, ValueError):
    """The requested inference method does not apply to the prior/model pair."""
