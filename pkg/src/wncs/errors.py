"""Exception types raised across the testbed."""


class WncsError(Exception):
    """Base class for every error raised by this package."""


class ParseError(WncsError, ValueError):
    pass


class DimensionError(WncsError, ValueError):
    pass


class DomainError(WncsError, ValueError):
    pass


class InvalidDistribution(WncsError, ValueError):
    pass


class Infeasible(WncsError, ValueError):
    pass


class NoConvergence(WncsError, RuntimeError):
    pass


class NumericalError(WncsError, ArithmeticError):
    pass


class NumericalOverflow(WncsError, ArithmeticError):
    """State norm blew past the divergence threshold during simulation."""


class EmptyTrace(WncsError, ValueError):
    pass


class InfeasibleAlways(WncsError, ValueError):
    """The always-transmit baseline needs at least as many channels as sensors."""


class TooLarge(WncsError, ValueError):
    pass


class SynthesisMissing(WncsError, ValueError):
    pass
