"""Exception hierarchy shared across the toolkit."""


class ToolkitError(Exception):
    """Base class for all abfinsler errors."""


class DomainError(ToolkitError):
    """Argument lies outside the admissible domain (e.g. |s| >= b0)."""


class NonPositive(ToolkitError):
    """A quantity that must be positive evaluated to <= 0."""


class ZeroVector(ToolkitError):
    """A nonzero vector was required."""


class ZeroCovector(ToolkitError):
    """A nonzero covector was required."""


class NoConvergence(ToolkitError):
    """An iterative solve exhausted its iteration budget."""


class HypothesisViolated(ToolkitError):
    """A structural precondition (e.g. B in W) does not hold."""


class DegenerateAxis(ToolkitError):
    """The construction needs a nonzero axis vector and got none."""


class SingularTensor(ToolkitError):
    """A linear solve against the fundamental tensor failed."""


class OutOfDomain(ToolkitError):
    """A chart-domain point lies outside the declared box."""


class NotFound(ToolkitError):
    """A search (e.g. geodesic shooting) produced no admissible solution."""


class InputError(ToolkitError):
    """Malformed or schema-invalid external input."""


class VerificationFailed(ToolkitError):
    """An internal postcondition check failed beyond tolerance."""
