"""Exception types shared across the package."""


class NoncompLabError(Exception):
    pass


# exact numerics
class DivisorContainsZero(NoncompLabError, ZeroDivisionError):
    pass


class OverflowBudgetExceeded(NoncompLabError, OverflowError):
    pass


class ConsistencyViolation(NoncompLabError):
    def __init__(self, k: int):
        super().__init__(f"approximants {k} and {k + 1} violate the 2^-k modulus")
        self.k = k


class PrefixTooShort(NoncompLabError):
    pass


# machines
class AlreadyHalted(NoncompLabError):
    pass


class MachineFormatError(NoncompLabError, ValueError):
    pass


# constructions
class GapViolation(NoncompLabError):
    def __init__(self, n: int, mu):
        super().__init__(f"mu enclosure {mu!r} at n={n} meets the forbidden gap [1/3, 5/3)")
        self.n = n
        self.mu = mu


# embedding
class InvalidEncoding(NoncompLabError, ValueError):
    pass


class WidthBlowup(NoncompLabError):
    pass


class NoContractionCertificate(NoncompLabError):
    pass


# flows and classification
class DomainExit(NoncompLabError):
    pass


class ToleranceUnachievable(NoncompLabError):
    pass


class ResolutionExceeded(NoncompLabError):
    pass


class CycleCertificationFailed(NoncompLabError):
    pass


class ManifoldEscape(NoncompLabError):
    pass


class NotStructurallyStable(NoncompLabError):
    pass


# driver
class SchemaError(NoncompLabError, ValueError):
    pass
