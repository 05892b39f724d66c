"""Exception hierarchy shared by the package."""


class RegMdpError(Exception):
    pass


class ShapeError(RegMdpError, ValueError):
    """Arrays whose dimensions disagree with the MDP they are used with."""


class DomainError(RegMdpError, ValueError):
    """Input outside the domain of a function (e.g. entropy gradient on the boundary)."""


class PreconditionError(RegMdpError, ValueError):
    pass


class MdpFormatError(RegMdpError, ValueError):
    """Malformed MDP or policy file."""


class ValidationError(RegMdpError, ValueError):
    def __init__(self, result):
        self.result = result
        super().__init__("; ".join(v.message for v in result.violations))


class NumericalBreakdown(RegMdpError, ArithmeticError):
    """A computation that cannot fail in exact arithmetic failed in floating point."""


class ConvergenceError(NumericalBreakdown):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
