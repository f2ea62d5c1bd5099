"""Exception hierarchy shared by all modules."""


class CkvulnError(Exception):
    """Base class for all package errors."""


class SourceError(CkvulnError):
    """An error tied to a location in some source text."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class ControllerSyntaxError(SourceError):
    pass


class UnsupportedConstruct(SourceError):
    """Loops, calls, non-affine arithmetic and other excluded constructs."""


class UndefinedVariable(SourceError):
    pass


class NoFeasiblePath(CkvulnError):
    pass


class PathExplosion(CkvulnError):
    pass


class OutOfDomain(CkvulnError):
    pass


class Infeasible(CkvulnError):
    pass


class Unbounded(CkvulnError):
    pass


class StlSyntaxError(SourceError):
    pass


class NegativeInterval(StlSyntaxError):
    pass


class UnknownChannel(CkvulnError):
    pass


class NonFiniteState(CkvulnError):
    pass


class AttackBoundViolated(CkvulnError):
    pass


class UnknownPlant(CkvulnError):
    pass


class ChannelMismatch(CkvulnError):
    pass


class ConfigError(CkvulnError):
    pass
