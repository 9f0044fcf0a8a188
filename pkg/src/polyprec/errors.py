"""Exception hierarchy shared by all polyprec modules."""


class PolyprecError(Exception):
    """Base class for every error raised by polyprec."""


# dense kernels

class NonConvergence(PolyprecError, ArithmeticError):
    pass


class BranchCutViolation(PolyprecError, ValueError):
    """An eigenvalue lies on the closed negative real axis."""


class ZeroDiagonalPair(PolyprecError, ArithmeticError):
    """Parlett recurrence hit a (near) zero sum of square-rooted eigenvalues."""


class SingularMatrix(PolyprecError, ArithmeticError):
    pass


class RankDeficient(PolyprecError, ArithmeticError):
    pass


# operators

class DimensionMismatch(PolyprecError, ValueError):
    pass


class SpectrumLeak(PolyprecError, ValueError):
    pass


class ParseError(PolyprecError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedField(PolyprecError, ValueError):
    pass


# krylov

class ZeroStartVector(PolyprecError, ValueError):
    pass


class SingularH(PolyprecError, ArithmeticError):
    pass


# polynomials

class InvalidInterval(PolyprecError, ValueError):
    pass


class BranchCutNode(PolyprecError, ValueError):
    pass


class BranchCutRitz(BranchCutNode):
    """A Ritz value harvested for the preconditioner lies on (-inf, 0]."""


class NearCoincidentNodes(PolyprecError, ValueError):
    pass


class DegenerateContour(PolyprecError, ValueError):
    pass


class NodeOnBranchCut(PolyprecError, ValueError):
    pass


class RecurrenceBreakdown(PolyprecError, ArithmeticError):
    pass


# drivers / cli

class EpsilonTooLarge(UserWarning):
    """Uniform relative error is too large for the condition-number bound."""


class BranchWarning(UserWarning):
    """The preconditioning polynomial failed its branch certificate."""


class ConfigError(PolyprecError, ValueError):
    pass
