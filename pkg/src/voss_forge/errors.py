"""Exception hierarchy shared by all modules."""


class VossError(Exception):
    """Base class for every error raised by voss_forge."""


class DomainError(VossError, ValueError):
    """An argument lies outside the admissible parameter domain."""


class SingularDomainError(DomainError):
    """A sample touches or crosses a singular curve of the net.

    ``kind`` is ``"fold"`` (angle reaches pi) or ``"cusp"`` (angle reaches 0).
    """

    def __init__(self, message: str, kind: str):
        super().__init__(f"{message} [{kind}]")
        self.kind = kind


class SolverError(VossError, RuntimeError):
    """A numerical solver or quadrature failed to converge."""


class IntegrationError(SolverError):
    """Path integration produced inconsistent or drifting results."""


class DegenerateImmersionError(VossError, ValueError):
    """The first fundamental form is singular at some sample."""

    def __init__(self, message: str, index=None):
        super().__init__(message if index is None else f"{message} at sample {index}")
        self.index = index
