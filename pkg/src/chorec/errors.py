"""Exception hierarchy shared by every chorec module."""


class ChorecError(Exception):
    """Base class for all user-facing errors."""


class ParseError(ChorecError, SyntaxError):
    """Malformed input text; ``line``/``col`` locate the offending token."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f" at {line}:{col}" if line is not None else ""
        super().__init__(f"{message}{where}")


class SelfCommunicationError(ChorecError):
    pass


class UnboundProcedureError(ChorecError):
    pass


class UnguardedRecursionError(ChorecError):
    pass


class DuplicateProcessError(ChorecError):
    pass


class MultipleExitPoints(ChorecError):
    pass


class NoExitPoint(ChorecError):
    pass


class InvalidRedex(ChorecError):
    pass


class InvariantViolation(ChorecError):
    """Raised when a metatheoretic guarantee fails at run time (e.g. a stuck choreography)."""


class HasConditional(ChorecError):
    pass


class PreconditionViolation(ChorecError):
    pass


class ArityError(ChorecError):
    pass


class NameClashError(ChorecError):
    pass


class MergeError(ChorecError):
    """Two behaviours have no merge; ``left`` and ``right`` are the innermost mismatching pair."""

    def __init__(self, left, right):
        self.left = left
        self.right = right
        super().__init__(f"cannot merge {left!r} with {right!r}")


class ProjectabilityError(ChorecError):
    def __init__(self, points):
        self.points = list(points)
        names = ", ".join(sorted({p.process for p in self.points}))
        super().__init__(f"choreography is not projectable (processes: {names})")
