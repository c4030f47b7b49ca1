"""Exception types shared across the package."""


class WotroLabError(Exception):
    """Base class for every error raised by this package."""


class NonPrime(WotroLabError, ValueError):
    pass


class EvenCharacteristic(WotroLabError, ValueError):
    pass


class ReducibleModulus(WotroLabError, ValueError):
    pass


class ZeroInverse(WotroLabError, ZeroDivisionError):
    pass


class FieldMismatch(WotroLabError, ValueError):
    pass


class TooLarge(WotroLabError, ValueError):
    pass


class DimensionMismatch(WotroLabError, ValueError):
    pass


class NotHermitian(WotroLabError, ValueError):
    pass


class NoConvergence(WotroLabError, RuntimeError):
    pass


class ZeroProbabilityBranch(WotroLabError, RuntimeError):
    pass


class AlphabetMismatch(WotroLabError, ValueError):
    pass


class BadParams(WotroLabError, ValueError):
    pass


class TooManyFunctions(WotroLabError, ValueError):
    pass


class InfeasibleCertificate(WotroLabError, RuntimeError):
    pass


class RankDeficient(WotroLabError, ValueError):
    pass


class NotDistinct(WotroLabError, ValueError):
    pass


class DoubleFire(WotroLabError, RuntimeError):
    pass


class LengthMismatch(WotroLabError, ValueError):
    pass


class InvalidAttackFamily(WotroLabError, ValueError):
    pass


class SimulationFailed(WotroLabError, RuntimeError):
    pass


class RetryExhausted(WotroLabError, RuntimeError):
    pass


class Exhausted(WotroLabError, RuntimeError):
    pass


class UnknownExperiment(WotroLabError, KeyError):
    pass
