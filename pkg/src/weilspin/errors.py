"""Exception hierarchy. Every error raised by the engine derives from WeilspinError."""


class WeilspinError(Exception):
    """Base class."""


class DivisionByZero(WeilspinError, ZeroDivisionError):
    pass


class AmbientMismatch(WeilspinError, ValueError):
    pass


class NonNilpotentOverflow(WeilspinError, ValueError):
    pass


class FieldMismatch(WeilspinError, ValueError):
    pass


class NotFCompatible(WeilspinError, ValueError):
    pass


class NotIsotropic(WeilspinError, ValueError):
    pass


class NotMaximal(WeilspinError, ValueError):
    pass


class DegenerateW(WeilspinError, ValueError):
    pass


class NotPurelyImaginary(WeilspinError, ValueError):
    pass


class NotInInvariantSum(WeilspinError, ValueError):
    pass


class NoCertificateFound(WeilspinError, ValueError):
    pass


class NotInBB1(WeilspinError, ValueError):
    pass


class NotInFamily(WeilspinError, ValueError):
    pass


class ZeroRank(WeilspinError, ValueError):
    pass


class FixtureSearchFailed(WeilspinError, RuntimeError):
    pass


class EtaIncompatible(WeilspinError, ValueError):
    pass


class NotAMember(WeilspinError, ValueError):
    pass


class SearchExhausted(WeilspinError, RuntimeError):
    pass


class ConfigError(WeilspinError, ValueError):
    """Schema violation in a job config; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
