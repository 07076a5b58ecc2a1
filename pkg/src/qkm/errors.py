"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`QKMError`.
The CLI maps the three top-level families onto exit codes: invalid input (3),
convergence failure (2); singular points are reported per row.
"""


class QKMError(Exception):
    """Base class for package errors."""


class InvalidInput(QKMError, ValueError):
    """Input data violates a documented invariant."""


class NodeCollision(InvalidInput):
    """Cauchy nodes are not pairwise distinct."""


class DomainViolation(InvalidInput):
    """A denominator of the spectral system vanishes."""


class ZeroCoupling(InvalidInput):
    """The generic preimage path was requested at zero coupling."""


class OddN(InvalidInput):
    pass


class InvalidType(InvalidInput):
    pass


class SingularPoint(QKMError, ArithmeticError):
    """Evaluation point lies on (or too close to) a pole or removable zero."""


class PoleHit(SingularPoint):
    pass


class FiberError(QKMError):
    """A fibre of R could not be resolved into distinct, labelled branches."""


class DegenerateFiber(FiberError):
    pass


class BaseNotFound(FiberError):
    pass


class BranchAmbiguity(FiberError):
    pass


class BranchInversionFailure(FiberError):
    pass


class ConvergenceError(QKMError):
    """An iterative solver did not produce an acceptable solution."""


class Divergence(ConvergenceError):
    pass


class ChamberExit(ConvergenceError):
    pass


class RootCountMismatch(ConvergenceError):
    pass
